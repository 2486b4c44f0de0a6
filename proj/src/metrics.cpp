#include <radiolam/metrics.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace radiolam::metrics
{
	namespace
	{
		void check(const Map2D &truth, const Map2D &est)
		{
			if (!truth.same_shape(est) || truth.size() != est.size())
				throw DimensionMismatch("metric inputs differ in shape");
			if (truth.size() == 0)
				throw InvalidArgument("metric inputs are empty");
		}
	}

	double mae(const Map2D &truth, const Map2D &est)
	{
		check(truth, est);
		double sum = 0.0;
		for (std::size_t i = 0; i < truth.size(); i++)
			sum += std::abs(double(truth.data[i]) - double(est.data[i]));
		return sum / static_cast<double>(truth.size());
	}

	double mse(const Map2D &truth, const Map2D &est)
	{
		check(truth, est);
		double sum = 0.0;
		for (std::size_t i = 0; i < truth.size(); i++)
		{
			const double d = double(truth.data[i]) - double(est.data[i]);
			sum += d * d;
		}
		return sum / static_cast<double>(truth.size());
	}

	double psnr_from_mse(double max_i, double mse_value)
	{
		if (mse_value == 0.0)
			return std::numeric_limits<double>::infinity();
		return 20.0 * std::log10(max_i / std::sqrt(mse_value));
	}

	double psnr(const Map2D &truth, const Map2D &est)
	{
		const double m = mse(truth, est);
		const double max_i = *std::max_element(truth.data.begin(), truth.data.end());
		return psnr_from_mse(max_i, m);
	}
}
