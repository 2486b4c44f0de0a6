#pragma once

#include <radiolam/config.hpp>
#include <radiolam/election.hpp>

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace radiolam
{
	struct PipelineOptions
	{
		bool use_augment = true;
		bool use_election = true;
		int candidates = 16;
		int rounds = 1;
		SampleOptions sample;
		election::NoiseCtlState noise;
		augment::AugmentParams augment;
		int threads = 1;
	};

	PipelineOptions pipeline_options(const RunConfig &cfg, const MoEParams &moe);

	struct PipelineResult
	{
		Map2D winner;
		augment::ProjectedSet projected;
		election::LoopResult loop;
	};

	/// Projection step of the pipeline; without augmentation only coplanar samples are kept.
	augment::ProjectedSet project_samples(const SampleSet &samples, const augment::SceneContext &ctx, int h_t,
			const augment::AugmentParams &params, bool use_augment);

	/// Augmentation, candidate generation and election for one target plane. Without election the
	/// first candidate is returned.
	PipelineResult estimate_map(const MoEParams &moe, const augment::SceneContext &ctx, const BuildingMask &buildings,
			const TerrainMap &terrain, const SampleSet &samples, int h_t, const PipelineOptions &options, std::uint64_t seed);

	/// Convenience overload reading geometry from an estimation-safe scene.
	PipelineResult estimate_map(const MoEParams &moe, const Scene &scene, const SampleSet &samples, int h_t,
			const PipelineOptions &options, std::uint64_t seed);

	/// Training examples: draws_per_scene sample sets per scene, each projected onto every height.
	std::vector<TrainItem> build_train_items(const std::vector<Scene> &scenes, int k, int draws_per_scene,
			const augment::AugmentParams &params, std::uint64_t seed, int threads);

	std::vector<RouterItem> build_router_items(const std::vector<Scene> &scenes);

	struct TrainLogs
	{
		std::vector<double> shared;
		std::vector<std::vector<double>> domain;
		std::vector<double> router;
		std::vector<double> finetune;
	};

	using ProgressFn = std::function<void(const std::string&)>;

	/// Cold start (shared expert, one expert per environment, router), fine-tuning, then
	/// calibration of the election variance threshold. Requires every environment label.
	MoEParams train_moe(const std::vector<Scene> &scenes, const RunConfig &cfg, TrainLogs *logs = nullptr,
			const ProgressFn &progress = nullptr);

	/// Median election variance over a calibration batch drawn from the given scenes.
	double calibrate_var_threshold(const MoEParams &moe, const std::vector<Scene> &scenes, const RunConfig &cfg);

	struct DatasetEntry
	{
		std::string id;
		EnvLabel env = EnvLabel::rural;
		std::string split;
		std::filesystem::path manifest;
		std::filesystem::path samples;
	};

	/// index.json lists every scene with paths relative to the dataset directory.
	void write_dataset_index(const std::filesystem::path &dir, const std::vector<DatasetEntry> &entries);
	std::vector<DatasetEntry> read_dataset_index(const std::filesystem::path &dir);

	/// Generates train and test scenes per the config, writes manifests, samples and index.json.
	std::vector<DatasetEntry> generate_dataset(const RunConfig &cfg, const std::filesystem::path &dir, int threads = 1);

	/// Method names accepted by evaluation.
	inline const std::vector<std::string> kMethods { "radiolam", "radiolam-no-augment", "radiolam-no-election",
			"radiolam-no-augment-no-election", "rbf", "kriging" };

	/// Estimates plane h_t with the named method. Pipeline methods need moe.
	Map2D run_method(const std::string &method, const MoEParams *moe, const Scene &scene, const SampleSet &samples, int h_t,
			const RunConfig &cfg, std::uint64_t seed, int threads, std::vector<double> *sigma_trace = nullptr);

	struct EvalRow
	{
		std::string scene_id;
		std::string env;
		int h_t = 0;
		std::string method;
		double mae = 0.0;
		double mse = 0.0;
		double psnr = 0.0;
	};

	/// Mean rows per (env, h_t, method) and per (all, h_t, method), scene_id "mean".
	std::vector<EvalRow> summarize(const std::vector<EvalRow> &rows);
	std::string eval_csv(const std::vector<EvalRow> &rows);
}
