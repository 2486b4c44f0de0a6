#include <radiolam/augment.hpp>
#include <radiolam/baselines.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

namespace radiolam::augment
{
	void AugmentParams::validate() const
	{
		if (!(u_scale_m > 0.0))
			throw InvalidArgument("augment: u_scale must be positive");
		if (!(theta >= 0.0 && theta < 1.0))
			throw InvalidArgument("augment: theta must lie in [0, 1)");
		if (!(path_loss_n > 0.0))
			throw InvalidArgument("augment: path-loss exponent must be positive");
		if (!hata_enabled && !free_space_enabled)
			throw InvalidArgument("augment: at least one propagation model must be enabled");
		if (max_transmitters < 1)
			throw InvalidArgument("augment: max_transmitters must be at least 1");
		if (lm_max_iters < 1)
			throw InvalidArgument("augment: lm_max_iters must be at least 1");
		if (!(lm_tol >= 0.0))
			throw InvalidArgument("augment: lm_tol must be non-negative");
	}

	SceneContext context_of(const Scene &scene)
	{
		return SceneContext { scene.grid, scene.freq_mhz, scene.bounds, &scene.buildings, &scene.terrain };
	}

	namespace
	{
		struct Lattice
		{
			std::vector<double> xs, ys, zs;

			std::size_t size() const noexcept
			{
				return xs.size() * ys.size() * zs.size();
			}
			std::size_t index(std::size_t i, std::size_t j, std::size_t k) const noexcept
			{
				return (i * ys.size() + j) * zs.size() + k;
			}
		};

		std::vector<double> axis_nodes(int dim, int stride)
		{
			std::vector<double> nodes;
			for (int i = 0; i * stride < dim; i++)
				nodes.push_back(i * stride + 0.5 * (stride - 1));
			return nodes;
		}

		Lattice make_lattice(const GridSpec &grid)
		{
			constexpr int max_nodes = 16;
			const int stride = (std::max(grid.x_dim, grid.y_dim) + max_nodes - 1) / max_nodes;
			Lattice lat;
			lat.xs = axis_nodes(grid.x_dim, stride);
			lat.ys = axis_nodes(grid.y_dim, stride);
			const double ztop = grid.height_cells(grid.h_dim - 1);
			for (int k = 0; k < max_nodes; k++)
				lat.zs.push_back((k + 0.5) * ztop / max_nodes);
			return lat;
		}

		double power_law(double d, double n)
		{
			return std::pow(std::max(d, 1.0), -n);
		}
	}

	std::vector<Transmitter> estimate_transmitters(const SampleSet &samples, const GridSpec &grid, const AugmentParams &params)
	{
		if (samples.size() < 4)
			throw InsufficientData("transmitter localization needs at least 4 samples");
		params.validate();

		std::vector<Vec3> points;
		std::vector<double> values;
		for (std::size_t i = 0; i < samples.size(); i++)
		{
			points.push_back(samples.position(i));
			values.push_back(samples.samples[i].rss);
		}
		const baselines::GaussianRbf rbf(points, values, baselines::default_rbf_shape(grid));

		const Lattice lat = make_lattice(grid);
		std::vector<double> field(lat.size());
		for (std::size_t i = 0; i < lat.xs.size(); i++)
			for (std::size_t j = 0; j < lat.ys.size(); j++)
				for (std::size_t k = 0; k < lat.zs.size(); k++)
					field[lat.index(i, j, k)] = rbf(Vec3 { lat.xs[i], lat.ys[j], lat.zs[k] });

		// nearest-rank 75th percentile
		std::vector<double> sorted = field;
		std::sort(sorted.begin(), sorted.end());
		const std::size_t rank = static_cast<std::size_t>(std::ceil(0.75 * sorted.size()));
		const double p75 = sorted[std::max<std::size_t>(rank, 1) - 1];

		auto beats = [&](std::size_t a, std::size_t b)
		{
			return field[a] > field[b] || (field[a] == field[b] && a < b);
		};

		std::vector<std::size_t> peaks;
		const long ni = long(lat.xs.size()), nj = long(lat.ys.size()), nk = long(lat.zs.size());
		for (long i = 0; i < ni; i++)
			for (long j = 0; j < nj; j++)
				for (long k = 0; k < nk; k++)
				{
					const std::size_t c = lat.index(i, j, k);
					if (!(field[c] > p75))
						continue;
					bool is_peak = true;
					for (long di = -1; di <= 1 && is_peak; di++)
						for (long dj = -1; dj <= 1 && is_peak; dj++)
							for (long dk = -1; dk <= 1 && is_peak; dk++)
							{
								const long a = i + di, b = j + dj, e = k + dk;
								if ((di == 0 && dj == 0 && dk == 0) || a < 0 || b < 0 || e < 0 || a >= ni || b >= nj || e >= nk)
									continue;
								if (!beats(c, lat.index(a, b, e)))
									is_peak = false;
							}
					if (is_peak)
						peaks.push_back(c);
				}

		if (peaks.empty())
		{
			// flat field: fall back to the global maximum
			std::size_t best = 0;
			for (std::size_t c = 1; c < field.size(); c++)
				if (beats(c, best))
					best = c;
			peaks.push_back(best);
		}
		std::sort(peaks.begin(), peaks.end(), [&](std::size_t a, std::size_t b)
		{
			return beats(a, b);
		});
		if (peaks.size() > static_cast<std::size_t>(params.max_transmitters))
			peaks.resize(static_cast<std::size_t>(params.max_transmitters));

		std::vector<Transmitter> result;
		for (std::size_t c : peaks)
		{
			const std::size_t k = c % lat.zs.size();
			const std::size_t j = (c / lat.zs.size()) % lat.ys.size();
			const std::size_t i = c / (lat.zs.size() * lat.ys.size());
			Transmitter tx;
			tx.pos = Vec3 { lat.xs[i], lat.ys[j], lat.zs[k] };
			result.push_back(tx);
		}
		return result;
	}

	std::vector<Transmitter> fit_power_params(const SampleSet &samples, std::span<const Transmitter> tx_positions,
			const AugmentParams &params, LmReport *report)
	{
		if (samples.empty())
			throw InsufficientData("power fit needs at least one sample");
		if (tx_positions.empty())
			throw InvalidArgument("power fit needs at least one transmitter position");
		params.validate();

		const Eigen::Index k = static_cast<Eigen::Index>(samples.size());
		const Eigen::Index m = static_cast<Eigen::Index>(tx_positions.size());
		const double n = params.path_loss_n;

		// Model is r_s = sum_tau K_tau * phi(s, tau); the Jacobian is phi and does not depend on K.
		Eigen::MatrixXd phi(k, m);
		Eigen::VectorXd r(k);
		std::size_t strongest = 0;
		for (Eigen::Index s = 0; s < k; s++)
		{
			const Vec3 p = samples.position(static_cast<std::size_t>(s));
			r(s) = samples.samples[s].rss;
			if (samples.samples[s].rss > samples.samples[strongest].rss)
				strongest = static_cast<std::size_t>(s);
			for (Eigen::Index t = 0; t < m; t++)
				phi(s, t) = power_law(distance(p, tx_positions[t].pos), n);
		}

		Eigen::VectorXd K(m);
		const Vec3 ps = samples.position(strongest);
		for (Eigen::Index t = 0; t < m; t++)
			K(t) = samples.samples[strongest].rss * std::pow(std::max(distance(ps, tx_positions[t].pos), 1.0), n);

		const Eigen::MatrixXd jtj = phi.transpose() * phi;
		auto cost_of = [&](const Eigen::VectorXd &v)
		{
			return (phi * v - r).squaredNorm();
		};

		LmReport rep;
		double lambda = 1e-3;
		double cost = cost_of(K);
		Eigen::VectorXd grad = phi.transpose() * (phi * K - r);
		while (rep.iterations < params.lm_max_iters)
		{
			if (grad.norm() < params.lm_tol || cost == 0.0)
				break;
			rep.iterations++;

			Eigen::MatrixXd a = jtj;
			bool singular = false;
			for (Eigen::Index t = 0; t < m; t++)
			{
				if (!(jtj(t, t) > 0.0))
					singular = true;
				a(t, t) += lambda * jtj(t, t);
			}
			Eigen::VectorXd step;
			if (!singular)
			{
				const Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
				if (ldlt.info() == Eigen::Success && ldlt.isPositive())
					step = ldlt.solve(-grad);
				if (step.size() == 0 || !step.allFinite())
					singular = true;
			}
			if (singular)
			{
				// steepest descent with exact line length for a quadratic cost
				const Eigen::VectorXd jg = phi * grad;
				const double denom = jg.squaredNorm();
				if (!(denom > 0.0))
					break;
				step = -(grad.squaredNorm() / denom) * grad;
				rep.gradient_fallbacks++;
			}

			const Eigen::VectorXd trial = K + step;
			const double trial_cost = cost_of(trial);
			if (trial_cost < cost)
			{
				const double rel = (cost - trial_cost) / std::max(cost, 1e-300);
				K = trial;
				cost = trial_cost;
				grad = phi.transpose() * (phi * K - r);
				lambda = std::max(lambda / 10.0, 1e-12);
				if (rel < params.lm_tol)
					break;
			}
			else
			{
				rep.rejected_steps++;
				lambda *= 10.0;
				if (lambda > 1e12)
					break;
			}
		}
		rep.cost = cost;
		rep.gradient_norm = grad.norm();
		if (report != nullptr)
			*report = rep;

		std::vector<Transmitter> fitted(tx_positions.begin(), tx_positions.end());
		for (Eigen::Index t = 0; t < m; t++)
			fitted[t].gain_const = std::max(K(t), 0.0);
		return fitted;
	}

	double free_space_predict(const Vec3 &point, std::span<const Transmitter> txs, double n)
	{
		if (txs.empty())
			throw InvalidArgument("free-space prediction needs at least one transmitter");
		double sum = 0.0;
		for (const Transmitter &tx : txs)
			sum += tx.gain_const * power_law(distance(point, tx.pos), n);
		return std::clamp(sum, 0.0, 1.0);
	}

	double hata_correction(double h_m, double freq_mhz)
	{
		if (!(h_m > 0.0))
			throw InvalidArgument("hata correction needs a positive antenna height");
		if (!(freq_mhz > 0.0))
			throw InvalidArgument("hata correction needs a positive frequency");
		const double lf = std::log10(freq_mhz);
		return (1.1 * lf - 0.7) * h_m - (1.56 * lf - 0.8);
	}

	double hata_project(const Sample &sample, double target_h_m, double source_h_m, double freq_mhz, const NormBounds &bounds)
	{
		if (!(bounds.hi_dbm > bounds.lo_dbm))
			throw InvalidArgument("normalization bounds need hi > lo");
		if (target_h_m == source_h_m)
			return sample.rss;
		const double delta_db = hata_correction(source_h_m, freq_mhz) - hata_correction(target_h_m, freq_mhz);
		return std::clamp(double(sample.rss) + delta_db / (bounds.hi_dbm - bounds.lo_dbm), 0.0, 1.0);
	}

	double blend_weight(double h_m, double u_scale_m)
	{
		if (!(u_scale_m > 0.0))
			throw InvalidArgument("blend weight needs a positive scale");
		return std::exp2(-h_m / u_scale_m);
	}

	namespace
	{
		ProjectedSet project(const SampleSet &samples, const SceneContext &ctx, int target_h, const AugmentParams &params,
				std::span<const Transmitter> txs)
		{
			const GridSpec &grid = ctx.grid;
			const double target_m = grid.heights_m[target_h];
			double w = blend_weight(target_m, params.u_scale_m);
			if (!params.hata_enabled)
				w = 0.0;
			if (!params.free_space_enabled)
				w = 1.0;

			ProjectedSet out;
			out.target_h = target_h;
			out.entries.reserve(samples.size());
			for (std::size_t i = 0; i < samples.size(); i++)
			{
				const Sample &s = samples.samples[i];
				ProjectedSample e;
				e.source_index = i;
				e.x = s.x;
				e.y = s.y;
				if (s.h == target_h)
					e.rss_hat = s.rss;
				else if (s.rss < params.theta)
					e.dropped = true;
				else if (ctx.buildings != nullptr && ctx.buildings->occupied(s.x, s.y, target_h))
					e.dropped = true;	// no signal inside a building, nothing to predict
				else
				{
					double free = 0.0, hata = 0.0;
					if (w < 1.0)
						free = free_space_predict(Vec3 { double(s.x), double(s.y), grid.height_cells(target_h) }, txs, params.path_loss_n);
					if (w > 0.0)
						hata = hata_project(s, target_m, grid.heights_m[s.h], ctx.freq_mhz, ctx.bounds);
					const double r = std::clamp((1.0 - w) * free + w * hata, 0.0, 1.0);
					e.rss_hat = static_cast<float>(r);
					e.dropped = e.rss_hat < params.theta;
				}
				out.entries.push_back(e);
			}
			return out;
		}

		void check_inputs(const SampleSet &samples, const SceneContext &ctx, int target_h, const AugmentParams &params)
		{
			params.validate();
			if (samples.empty())
				throw InsufficientData("augmentation needs at least one sample");
			if (target_h < 0 || target_h >= ctx.grid.h_dim)
				throw InvalidArgument("target height index out of range");
			if (!(samples.grid == ctx.grid))
				throw InvalidArgument("sample grid does not match the scene grid");
			if (ctx.buildings != nullptr && !ctx.buildings->matches(ctx.grid))
				throw DimensionMismatch("building mask does not match the scene grid");
		}

		bool needs_free_space(const SceneContext &ctx, int target_h, const AugmentParams &params)
		{
			if (!params.free_space_enabled)
				return false;
			if (!params.hata_enabled)
				return true;
			return blend_weight(ctx.grid.heights_m[target_h], params.u_scale_m) < 1.0;
		}
	}

	ProjectedSet augment(const SampleSet &samples, const SceneContext &ctx, int target_h, const AugmentParams &params)
	{
		check_inputs(samples, ctx, target_h, params);
		std::vector<Transmitter> txs;
		if (needs_free_space(ctx, target_h, params))
		{
			const std::vector<Transmitter> positions = estimate_transmitters(samples, ctx.grid, params);
			txs = fit_power_params(samples, positions, params);
		}
		return project(samples, ctx, target_h, params, txs);
	}

	ProjectedSet augment_with_transmitters(const SampleSet &samples, const SceneContext &ctx, int target_h,
			const AugmentParams &params, std::span<const Transmitter> txs)
	{
		check_inputs(samples, ctx, target_h, params);
		if (needs_free_space(ctx, target_h, params) && txs.empty())
			throw InvalidArgument("free-space projection needs at least one transmitter");
		return project(samples, ctx, target_h, params, txs);
	}

	ProjectedSet coplanar_only(const SampleSet &samples, int target_h)
	{
		ProjectedSet out;
		out.target_h = target_h;
		for (std::size_t i = 0; i < samples.size(); i++)
		{
			const Sample &s = samples.samples[i];
			ProjectedSample e { i, s.x, s.y, s.h == target_h ? s.rss : 0.0f, s.h != target_h };
			out.entries.push_back(e);
		}
		return out;
	}

	std::string to_csv(const ProjectedSet &projected)
	{
		std::ostringstream os;
		os << "source_index,x,y,rss_hat,dropped\n" << std::setprecision(9);
		for (const ProjectedSample &e : projected.entries)
			os << e.source_index << ',' << e.x << ',' << e.y << ',' << e.rss_hat << ',' << (e.dropped ? 1 : 0) << '\n';
		return os.str();
	}
}
