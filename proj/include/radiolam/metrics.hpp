#pragma once

#include <radiolam/common.hpp>

namespace radiolam::metrics
{
	/// Mean absolute error over all cells. Throws DimensionMismatch on shape mismatch.
	double mae(const Map2D &truth, const Map2D &est);
	double mse(const Map2D &truth, const Map2D &est);
	/// 20 log10(MAX_I / sqrt(MSE)) with MAX_I the maximum of truth; +infinity when MSE is 0.
	double psnr(const Map2D &truth, const Map2D &est);
	double psnr_from_mse(double max_i, double mse_value);
}
