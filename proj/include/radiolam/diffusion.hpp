#pragma once

#include <radiolam/common.hpp>

#include <cstdint>
#include <functional>
#include <vector>

namespace radiolam
{
	struct DiffusionSchedule
	{
		int t_max = 0;
		std::vector<double> betas;
		std::vector<double> alphas;
		std::vector<double> alpha_bars;

		friend bool operator==(const DiffusionSchedule&, const DiffusionSchedule&) = default;
	};

	/// Linear betas from beta_1 to beta_T; alpha_bars[t] = prod_{i <= t} (1 - beta_i).
	DiffusionSchedule make_schedule(int t_max, double beta_1, double beta_T);

	struct DiffusionCoefficients
	{
		double signal;
		double noise;
	};

	/// (sqrt(alpha_bar_t), sqrt(1 - alpha_bar_t)).
	DiffusionCoefficients diffusion_coefficients(const DiffusionSchedule &schedule, int t);

	/// x_t = sqrt(alpha_bar_t) x0 + sqrt(1 - alpha_bar_t) eps.
	Map2D forward_diffuse(const Map2D &x0, int t, const Map2D &eps, const DiffusionSchedule &schedule);

	/// Standard normal map from a seeded stream.
	Map2D gaussian_map(int x_dim, int y_dim, std::uint64_t seed);

	/// Uniformly strided DDIM timesteps in increasing order, ending at t_max - 1:
	/// tau_i = (i + 1) * t_max / steps - 1.
	std::vector<int> ddim_timesteps(int t_max, int steps);

	/// Predicts the noise in x_t at timestep t.
	using NoisePredictor = std::function<Map2D(const Map2D &x_t, int t)>;

	struct DdimOptions
	{
		int steps = 10;
		/// Clamp the intermediate x0 estimate to [0, 1] and re-derive the noise from it.
		bool clip_intermediate = true;
	};

	/// Deterministic DDIM (eta = 0) from x_start at t_max - 1 down to x0; the result is clamped to [0, 1].
	Map2D ddim_sample(const DiffusionSchedule &schedule, const Map2D &x_start, const NoisePredictor &predict,
			const DdimOptions &options);
}
