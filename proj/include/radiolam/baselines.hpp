#pragma once

#include <radiolam/scene.hpp>

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <vector>

namespace radiolam::baselines
{
	/// Default Gaussian shape parameter 1 / (2 (diag / 4)^2), diag being the diagonal of the
	/// region in cell units (altitude converted through the cell size).
	double default_rbf_shape(const GridSpec &grid);

	/// Gaussian radial basis interpolant phi(r) = exp(-shape * r^2) with a ridge on the kernel diagonal.
	class GaussianRbf
	{
		public:
			GaussianRbf(std::span<const Vec3> centers, std::span<const double> values, double shape, double ridge = 1e-8);

			double operator()(const Vec3 &p) const;
			const Eigen::VectorXd& weights() const noexcept
			{
				return m_weights;
			}

		private:
			std::vector<Vec3> m_centers;
			Eigen::VectorXd m_weights;
			double m_shape;
	};

	/// Gaussian RBF through all samples in 3D, evaluated on every cell of plane h_t, clamped to [0, 1].
	Map2D rbf3d_estimate(const SampleSet &samples, int h_t, std::optional<double> shape = std::nullopt);

	enum class VariogramKind
	{
		spherical, exponential
	};

	struct VariogramModel
	{
		VariogramKind kind = VariogramKind::exponential;
		double nugget = 0.0;
		double sill = 1.0;
		double range_cells = 10.0;

		void validate() const;
		/// gamma(h); gamma(0) = 0 so kriging stays an exact interpolator even with a nugget.
		double operator()(double h) const noexcept;
	};

	struct EmpiricalVariogram
	{
		std::vector<double> lag;
		std::vector<double> gamma;
		std::vector<std::size_t> pairs;
	};

	EmpiricalVariogram empirical_variogram(const SampleSet &samples, int bins = 12);

	/// Least-squares fit of nugget, sill and range to the empirical semivariogram.
	VariogramModel fit_variogram(const SampleSet &samples, VariogramKind kind = VariogramKind::exponential, int bins = 12);

	/// Ordinary kriging system for fixed sample positions; factorized once, solved per target.
	class OrdinaryKriging
	{
		public:
			/// Throws InsufficientData for fewer than 2 points.
			OrdinaryKriging(std::span<const Vec3> points, std::span<const double> values, const VariogramModel &vg);

			/// Weights for a target (sum to 1) followed by the Lagrange multiplier.
			Eigen::VectorXd solve(const Vec3 &target) const;
			std::vector<double> weights(const Vec3 &target) const;
			double estimate(const Vec3 &target) const;
			bool used_ridge() const noexcept
			{
				return m_ridge_used;
			}

		private:
			std::vector<Vec3> m_points;
			Eigen::VectorXd m_values;
			VariogramModel m_vg;
			Eigen::PartialPivLU<Eigen::MatrixXd> m_lu;
			bool m_ridge_used = false;
	};

	/// Ordinary kriging over 3D sample positions evaluated on plane h_t, clamped to [0, 1].
	/// The variogram is fitted to the samples when none is supplied.
	Map2D kriging3d_estimate(const SampleSet &samples, int h_t, std::optional<VariogramModel> vg = std::nullopt);
}
