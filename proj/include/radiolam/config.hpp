#pragma once

#include <radiolam/augment.hpp>
#include <radiolam/baselines.hpp>
#include <radiolam/election.hpp>
#include <radiolam/moe.hpp>

#include <filesystem>
#include <optional>
#include <string>

namespace radiolam
{
	struct SceneSection
	{
		/// Shared generation settings; env_label is overridden per scene.
		SceneGenConfig gen;
		int train_per_env = 40;
		int test_per_env = 10;
		/// Samples drawn per scene (k).
		int samples_k = 16;
	};

	struct GenerationSection
	{
		DenoiserArch denoiser;
		int router_hidden = 8;
		int t_max = 1000;
		double beta_1 = 1e-4;
		double beta_T = 0.02;
		int ddim_steps = 10;
		bool clip_intermediate = true;
		double guidance_scale = 1.0;
		/// Independent sample draws per training scene (each projected onto every height).
		int draws_per_scene = 4;
		TrainConfig shared { 30, 16, 1e-3f, 1 };
		TrainConfig domain { 30, 16, 1e-3f, 1 };
		TrainConfig router { 200, 16, 1e-2f, 1 };
		TrainConfig finetune { 3, 16, 2e-4f, 1 };
		int candidates = 16;
	};

	struct ElectionSection
	{
		/// var_threshold is replaced by the checkpoint's calibrated value unless fixed here.
		election::NoiseCtlState noise;
		bool fixed_threshold = false;
		int rounds = 1;
		/// Training items used to calibrate the variance threshold.
		int calibration_items = 12;
	};

	struct BaselineSection
	{
		baselines::VariogramKind variogram = baselines::VariogramKind::exponential;
		int bins = 12;
	};

	struct RunConfig
	{
		std::uint64_t seed = 1;
		int threads = 1;
		SceneSection scene;
		augment::AugmentParams augment;
		GenerationSection generation;
		ElectionSection election;
		BaselineSection baselines;

		void validate() const;
	};

	/// Missing keys keep their defaults; wrong types or invalid values throw FormatError.
	RunConfig parse_run_config(const std::string &json_text);
	/// Reads the file and applies the RADIOLAM_SEED environment override.
	RunConfig load_run_config(const std::filesystem::path &path);
	/// Overrides seed from RADIOLAM_SEED when it is set.
	void apply_env_overrides(RunConfig &cfg);
	std::string to_json(const RunConfig &cfg);
}
