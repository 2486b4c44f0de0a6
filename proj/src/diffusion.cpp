#include <radiolam/diffusion.hpp>

#include <algorithm>
#include <cmath>
#include <random>

namespace radiolam
{
	DiffusionSchedule make_schedule(int t_max, double beta_1, double beta_T)
	{
		if (t_max < 2)
			throw InvalidArgument("diffusion schedule needs at least 2 steps");
		if (!(beta_1 > 0.0 && beta_1 < beta_T && beta_T < 1.0))
			throw InvalidArgument("diffusion schedule needs 0 < beta_1 < beta_T < 1");
		DiffusionSchedule s;
		s.t_max = t_max;
		double prod = 1.0;
		for (int t = 0; t < t_max; t++)
		{
			const double beta = beta_1 + (beta_T - beta_1) * t / (t_max - 1);
			s.betas.push_back(beta);
			s.alphas.push_back(1.0 - beta);
			prod *= 1.0 - beta;
			s.alpha_bars.push_back(prod);
		}
		return s;
	}

	DiffusionCoefficients diffusion_coefficients(const DiffusionSchedule &schedule, int t)
	{
		if (t < 0 || t >= schedule.t_max)
			throw InvalidArgument("diffusion timestep out of range");
		const double ab = schedule.alpha_bars[static_cast<std::size_t>(t)];
		return DiffusionCoefficients { std::sqrt(ab), std::sqrt(1.0 - ab) };
	}

	Map2D forward_diffuse(const Map2D &x0, int t, const Map2D &eps, const DiffusionSchedule &schedule)
	{
		if (!x0.same_shape(eps))
			throw DimensionMismatch("forward_diffuse: map and noise differ in shape");
		const DiffusionCoefficients c = diffusion_coefficients(schedule, t);
		Map2D out(x0.x_dim, x0.y_dim);
		for (std::size_t i = 0; i < x0.size(); i++)
			out.data[i] = static_cast<float>(c.signal * x0.data[i] + c.noise * eps.data[i]);
		return out;
	}

	Map2D gaussian_map(int x_dim, int y_dim, std::uint64_t seed)
	{
		std::mt19937_64 rng(seed);
		std::normal_distribution<float> dist(0.0f, 1.0f);
		Map2D m(x_dim, y_dim);
		for (float &v : m.data)
			v = dist(rng);
		return m;
	}

	std::vector<int> ddim_timesteps(int t_max, int steps)
	{
		if (steps < 1 || steps > t_max)
			throw InvalidArgument("DDIM step count must lie in [1, T]");
		std::vector<int> taus;
		for (int i = 0; i < steps; i++)
			taus.push_back(static_cast<int>((static_cast<long long>(i) + 1) * t_max / steps) - 1);
		return taus;
	}

	Map2D ddim_sample(const DiffusionSchedule &schedule, const Map2D &x_start, const NoisePredictor &predict,
			const DdimOptions &options)
	{
		const std::vector<int> taus = ddim_timesteps(schedule.t_max, options.steps);
		Map2D x = x_start;
		Map2D x0(x.x_dim, x.y_dim);
		for (int i = static_cast<int>(taus.size()) - 1; i >= 0; i--)
		{
			const int t = taus[static_cast<std::size_t>(i)];
			Map2D eps = predict(x, t);
			if (!eps.same_shape(x))
				throw DimensionMismatch("noise predictor returned a map of the wrong shape");
			const DiffusionCoefficients c = diffusion_coefficients(schedule, t);
			for (std::size_t p = 0; p < x.size(); p++)
			{
				double est = (x.data[p] - c.noise * eps.data[p]) / c.signal;
				if (options.clip_intermediate)
				{
					const double clipped = std::clamp(est, 0.0, 1.0);
					if (clipped != est)
					{
						eps.data[p] = static_cast<float>((x.data[p] - c.signal * clipped) / c.noise);
						est = clipped;
					}
				}
				x0.data[p] = static_cast<float>(est);
			}
			if (i == 0)
				break;
			const DiffusionCoefficients prev = diffusion_coefficients(schedule, taus[static_cast<std::size_t>(i - 1)]);
			for (std::size_t p = 0; p < x.size(); p++)
				x.data[p] = static_cast<float>(prev.signal * x0.data[p] + prev.noise * eps.data[p]);
		}
		for (float &v : x0.data)
			v = std::isfinite(v) ? std::clamp(v, 0.0f, 1.0f) : 0.0f;
		return x0;
	}
}
