#pragma once

#include <radiolam/scene.hpp>

#include <span>
#include <string>
#include <vector>

namespace radiolam::augment
{
	struct AugmentParams
	{
		/// Altitude scale U (meters) of the Hata/free-space blend weight.
		double u_scale_m = 20.0;
		/// Samples below theta are not projected; projections below theta are dropped.
		double theta = 0.05;
		double path_loss_n = 2.0;
		int max_transmitters = 5;
		int lm_max_iters = 100;
		double lm_tol = 1e-10;
		bool hata_enabled = true;
		bool free_space_enabled = true;

		void validate() const;
	};

	struct ProjectedSample
	{
		std::size_t source_index = 0;
		int x = 0;
		int y = 0;
		/// Predicted normalized RSS at (x, y, target plane); meaningless when dropped.
		float rss_hat = 0.0f;
		bool dropped = false;

		friend bool operator==(const ProjectedSample&, const ProjectedSample&) = default;
	};

	struct ProjectedSet
	{
		int target_h = 0;
		/// Exactly one entry per input sample, in sample order.
		std::vector<ProjectedSample> entries;

		friend bool operator==(const ProjectedSet&, const ProjectedSet&) = default;
	};

	/// Read-only view of the scene inputs an estimator may use. Transmitters are not part of it.
	struct SceneContext
	{
		GridSpec grid;
		double freq_mhz = 3500.0;
		NormBounds bounds;
		const BuildingMask *buildings = nullptr;
		const TerrainMap *terrain = nullptr;
	};

	SceneContext context_of(const Scene &scene);

	/// Locates transmitters as peaks of a Gaussian RBF interpolant of the samples evaluated on a
	/// coarse lattice (at most 16 nodes per axis). Peaks must exceed the 75th percentile of the
	/// lattice values; strongest first, at most params.max_transmitters. gain_const is left 0.
	/// Throws InsufficientData for fewer than 4 samples.
	std::vector<Transmitter> estimate_transmitters(const SampleSet &samples, const GridSpec &grid, const AugmentParams &params);

	struct LmReport
	{
		int iterations = 0;
		int rejected_steps = 0;
		int gradient_fallbacks = 0;
		double cost = 0.0;
		double gradient_norm = 0.0;
	};

	/// Levenberg-Marquardt fit of the gain constants K of fixed-position transmitters to the
	/// samples, minimizing sum_s (sum_tau K_tau d_s,tau^-n - r_s)^2. Damping starts at 1e-3,
	/// x10 on a rejected step, /10 on an accepted one. Returned constants are clamped to >= 0.
	std::vector<Transmitter> fit_power_params(const SampleSet &samples, std::span<const Transmitter> tx_positions,
			const AugmentParams &params, LmReport *report = nullptr);

	/// sum_tau K_tau * max(d, 1)^-n, clamped to [0, 1]. Point and positions in cell units.
	double free_space_predict(const Vec3 &point, std::span<const Transmitter> txs, double n);

	/// Mobile antenna height correction a(h) in dB (medium/small city variant).
	double hata_correction(double h_m, double freq_mhz);

	/// Moves a normalized sample from source_h_m to target_h_m on the same column by adding
	/// a(source) - a(target) dB, then clamps to [0, 1].
	double hata_project(const Sample &sample, double target_h_m, double source_h_m, double freq_mhz, const NormBounds &bounds);

	/// 2^(-h / U).
	double blend_weight(double h_m, double u_scale_m);

	/// Projects every sample onto the target plane. Samples already on the plane pass through;
	/// the remaining ones are blended (1 - w) * P_free + w * P_Hata with w = blend_weight(target altitude).
	/// Samples below theta, predictions below theta and targets inside a building come back dropped.
	ProjectedSet augment(const SampleSet &samples, const SceneContext &ctx, int target_h, const AugmentParams &params);

	/// Same as augment() but with caller-supplied transmitters for the free-space term.
	ProjectedSet augment_with_transmitters(const SampleSet &samples, const SceneContext &ctx, int target_h,
			const AugmentParams &params, std::span<const Transmitter> txs);

	/// No projection: on-plane samples pass through, everything else is marked dropped.
	ProjectedSet coplanar_only(const SampleSet &samples, int target_h);

	/// CSV with header source_index,x,y,rss_hat,dropped.
	std::string to_csv(const ProjectedSet &projected);
}
