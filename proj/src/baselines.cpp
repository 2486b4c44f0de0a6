#include <radiolam/baselines.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace radiolam::baselines
{
	double default_rbf_shape(const GridSpec &grid)
	{
		const double top = grid.heights_m.back() / grid.cell_size_m;
		const double diag = std::sqrt(double(grid.x_dim) * grid.x_dim + double(grid.y_dim) * grid.y_dim + top * top);
		const double sigma = diag / 4.0;
		return 1.0 / (2.0 * sigma * sigma);
	}

	GaussianRbf::GaussianRbf(std::span<const Vec3> centers, std::span<const double> values, double shape, double ridge) :
			m_centers(centers.begin(), centers.end()),
			m_shape(shape)
	{
		if (centers.empty())
			throw InsufficientData("RBF interpolation needs at least one sample");
		if (centers.size() != values.size())
			throw InvalidArgument("RBF centers and values differ in length");
		const Eigen::Index n = static_cast<Eigen::Index>(centers.size());
		Eigen::MatrixXd kernel(n, n);
		Eigen::VectorXd rhs(n);
		for (Eigen::Index i = 0; i < n; i++)
		{
			rhs(i) = values[i];
			for (Eigen::Index j = 0; j < n; j++)
			{
				const double r = distance(m_centers[i], m_centers[j]);
				kernel(i, j) = std::exp(-shape * r * r);
			}
		}
		// Wide Gaussian kernels are nearly singular. The ridged factorization keeps the solve stable
		// and a few refinement sweeps against the exact kernel restore interpolation at the sites.
		Eigen::MatrixXd ridged = kernel;
		ridged.diagonal().array() += ridge;
		const Eigen::LDLT<Eigen::MatrixXd> ldlt(ridged);
		m_weights = ldlt.solve(rhs);
		for (int sweep = 0; sweep < 32; sweep++)
		{
			const Eigen::VectorXd residual = rhs - kernel * m_weights;
			if (residual.lpNorm<Eigen::Infinity>() < 1e-12)
				break;
			m_weights += ldlt.solve(residual);
		}
	}

	double GaussianRbf::operator()(const Vec3 &p) const
	{
		double sum = 0.0;
		for (std::size_t i = 0; i < m_centers.size(); i++)
		{
			const double r = distance(p, m_centers[i]);
			sum += m_weights(static_cast<Eigen::Index>(i)) * std::exp(-m_shape * r * r);
		}
		return sum;
	}

	namespace
	{
		void collect(const SampleSet &samples, std::vector<Vec3> &points, std::vector<double> &values)
		{
			points.clear();
			values.clear();
			for (std::size_t i = 0; i < samples.size(); i++)
			{
				points.push_back(samples.position(i));
				values.push_back(samples.samples[i].rss);
			}
		}

		void check_plane(const SampleSet &samples, int h_t)
		{
			if (h_t < 0 || h_t >= samples.grid.h_dim)
				throw InvalidArgument("target height index out of range");
		}
	}

	Map2D rbf3d_estimate(const SampleSet &samples, int h_t, std::optional<double> shape)
	{
		check_plane(samples, h_t);
		if (samples.empty())
			throw InsufficientData("3D-RBF needs at least one sample");
		std::vector<Vec3> points;
		std::vector<double> values;
		collect(samples, points, values);
		const GridSpec &grid = samples.grid;
		const GaussianRbf rbf(points, values, shape.value_or(default_rbf_shape(grid)));

		Map2D out(grid.x_dim, grid.y_dim);
		const double z = grid.height_cells(h_t);
		for (int x = 0; x < grid.x_dim; x++)
			for (int y = 0; y < grid.y_dim; y++)
				out.at(x, y) = static_cast<float>(std::clamp(rbf(Vec3 { double(x), double(y), z }), 0.0, 1.0));
		return out;
	}

	void VariogramModel::validate() const
	{
		if (!(nugget >= 0.0))
			throw InvalidArgument("variogram nugget must be non-negative");
		if (!(sill > nugget))
			throw InvalidArgument("variogram sill must exceed the nugget");
		if (!(range_cells > 0.0))
			throw InvalidArgument("variogram range must be positive");
	}

	double VariogramModel::operator()(double h) const noexcept
	{
		if (h <= 0.0)
			return 0.0;
		const double partial = sill - nugget;
		switch (kind)
		{
			case VariogramKind::spherical:
			{
				if (h >= range_cells)
					return sill;
				const double r = h / range_cells;
				return nugget + partial * (1.5 * r - 0.5 * r * r * r);
			}
			case VariogramKind::exponential:
				return nugget + partial * (1.0 - std::exp(-3.0 * h / range_cells));
		}
		return sill;
	}

	EmpiricalVariogram empirical_variogram(const SampleSet &samples, int bins)
	{
		if (bins < 1)
			throw InvalidArgument("variogram needs at least one bin");
		std::vector<Vec3> points;
		std::vector<double> values;
		collect(samples, points, values);

		double max_lag = 0.0;
		for (std::size_t i = 0; i < points.size(); i++)
			for (std::size_t j = i + 1; j < points.size(); j++)
				max_lag = std::max(max_lag, distance(points[i], points[j]));

		EmpiricalVariogram ev;
		if (max_lag <= 0.0)
			return ev;
		const double width = max_lag / bins;
		std::vector<double> sum_lag(bins, 0.0), sum_gamma(bins, 0.0);
		std::vector<std::size_t> count(bins, 0);
		for (std::size_t i = 0; i < points.size(); i++)
			for (std::size_t j = i + 1; j < points.size(); j++)
			{
				const double d = distance(points[i], points[j]);
				const int b = std::min(bins - 1, static_cast<int>(d / width));
				const double diff = values[i] - values[j];
				sum_lag[b] += d;
				sum_gamma[b] += 0.5 * diff * diff;
				count[b]++;
			}
		for (int b = 0; b < bins; b++)
			if (count[b] > 0)
			{
				ev.lag.push_back(sum_lag[b] / count[b]);
				ev.gamma.push_back(sum_gamma[b] / count[b]);
				ev.pairs.push_back(count[b]);
			}
		return ev;
	}

	VariogramModel fit_variogram(const SampleSet &samples, VariogramKind kind, int bins)
	{
		const EmpiricalVariogram ev = empirical_variogram(samples, bins);
		VariogramModel best;
		best.kind = kind;
		constexpr double min_partial = 1e-6;
		if (ev.lag.empty())
		{
			best.nugget = 0.0;
			best.sill = min_partial;
			best.range_cells = 1.0;
			return best;
		}

		// For a fixed range the model is linear in (nugget, partial sill): scan the range and
		// solve the 2-parameter non-negative least squares in closed form.
		const double max_lag = ev.lag.back();
		double best_cost = std::numeric_limits<double>::infinity();
		const int scan = 200;
		for (int s = 1; s <= scan; s++)
		{
			const double range = 2.0 * max_lag * s / scan;
			VariogramModel unit { kind, 0.0, 1.0, range };
			std::vector<double> f(ev.lag.size());
			for (std::size_t i = 0; i < f.size(); i++)
				f[i] = unit(ev.lag[i]);

			auto cost_of = [&](double c0, double c1)
			{
				double c = 0.0;
				for (std::size_t i = 0; i < f.size(); i++)
				{
					const double r = c0 + c1 * f[i] - ev.gamma[i];
					c += r * r;
				}
				return c;
			};

			// unconstrained normal equations, then project onto c0 >= 0, c1 >= min_partial
			double s1 = 0, sf = 0, sff = 0, sg = 0, sfg = 0;
			for (std::size_t i = 0; i < f.size(); i++)
			{
				s1 += 1.0;
				sf += f[i];
				sff += f[i] * f[i];
				sg += ev.gamma[i];
				sfg += f[i] * ev.gamma[i];
			}
			std::vector<std::pair<double, double>> options;
			const double det = s1 * sff - sf * sf;
			if (std::abs(det) > 1e-14)
				options.emplace_back((sg * sff - sf * sfg) / det, (s1 * sfg - sf * sg) / det);
			options.emplace_back(0.0, sff > 0.0 ? sfg / sff : min_partial);
			options.emplace_back(sg / s1 - min_partial * sf / s1, min_partial);
			for (auto [c0, c1] : options)
			{
				c0 = std::max(c0, 0.0);
				c1 = std::max(c1, min_partial);
				const double c = cost_of(c0, c1);
				if (c < best_cost)
				{
					best_cost = c;
					best = VariogramModel { kind, c0, c0 + c1, range };
				}
			}
		}
		return best;
	}

	OrdinaryKriging::OrdinaryKriging(std::span<const Vec3> points, std::span<const double> values, const VariogramModel &vg) :
			m_points(points.begin(), points.end()),
			m_vg(vg)
	{
		if (points.size() < 2)
			throw InsufficientData("ordinary kriging needs at least 2 samples");
		if (points.size() != values.size())
			throw InvalidArgument("kriging points and values differ in length");
		vg.validate();
		const Eigen::Index n = static_cast<Eigen::Index>(points.size());
		m_values = Eigen::Map<const Eigen::VectorXd>(values.data(), n);

		Eigen::MatrixXd system(n + 1, n + 1);
		for (Eigen::Index i = 0; i < n; i++)
		{
			for (Eigen::Index j = 0; j < n; j++)
				system(i, j) = vg(distance(m_points[i], m_points[j]));
			system(i, n) = 1.0;
			system(n, i) = 1.0;
		}
		system(n, n) = 0.0;

		m_lu.compute(system);
		const double rcond = m_lu.rcond();
		if (!(rcond > 1e-13))
		{
			for (Eigen::Index i = 0; i < n; i++)
				system(i, i) -= 1e-10 * (vg.sill > 0 ? vg.sill : 1.0);
			m_lu.compute(system);
			m_ridge_used = true;
		}
	}

	Eigen::VectorXd OrdinaryKriging::solve(const Vec3 &target) const
	{
		const Eigen::Index n = static_cast<Eigen::Index>(m_points.size());
		Eigen::VectorXd rhs(n + 1);
		for (Eigen::Index i = 0; i < n; i++)
			rhs(i) = m_vg(distance(m_points[i], target));
		rhs(n) = 1.0;
		return m_lu.solve(rhs);
	}

	std::vector<double> OrdinaryKriging::weights(const Vec3 &target) const
	{
		const Eigen::VectorXd sol = solve(target);
		return std::vector<double>(sol.data(), sol.data() + sol.size() - 1);
	}

	double OrdinaryKriging::estimate(const Vec3 &target) const
	{
		const Eigen::VectorXd sol = solve(target);
		return sol.head(static_cast<Eigen::Index>(m_points.size())).dot(m_values);
	}

	Map2D kriging3d_estimate(const SampleSet &samples, int h_t, std::optional<VariogramModel> vg)
	{
		check_plane(samples, h_t);
		if (samples.size() < 2)
			throw InsufficientData("3D-kriging needs at least 2 samples");
		std::vector<Vec3> points;
		std::vector<double> values;
		collect(samples, points, values);
		const VariogramModel model = vg.value_or(fit_variogram(samples));
		const OrdinaryKriging ok(points, values, model);

		const GridSpec &grid = samples.grid;
		Map2D out(grid.x_dim, grid.y_dim);
		const double z = grid.height_cells(h_t);
		for (int x = 0; x < grid.x_dim; x++)
			for (int y = 0; y < grid.y_dim; y++)
				out.at(x, y) = static_cast<float>(std::clamp(ok.estimate(Vec3 { double(x), double(y), z }), 0.0, 1.0));
		return out;
	}
}
