#include <radiolam/common.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace radiolam
{
	double distance(const Vec3 &a, const Vec3 &b) noexcept
	{
		const double dx = a.x - b.x;
		const double dy = a.y - b.y;
		const double dz = a.z - b.z;
		return std::sqrt(dx * dx + dy * dy + dz * dz);
	}

	Map2D::Map2D(int x, int y, float fill) :
			x_dim(x),
			y_dim(y),
			data(static_cast<std::size_t>(std::max(x, 0)) * static_cast<std::size_t>(std::max(y, 0)), fill)
	{
	}

	std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) noexcept
	{
		// splitmix64 finalizer over a combined state
		std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (index + 1);
		z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
		z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
		return z ^ (z >> 31);
	}

	void parallel_for_impl(std::size_t n, int threads, void (*fn)(void*, std::size_t), void *ctx)
	{
		const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(threads, 1)));
		if (workers <= 1)
		{
			for (std::size_t i = 0; i < n; i++)
				fn(ctx, i);
			return;
		}

		std::atomic<std::size_t> next { 0 };
		std::exception_ptr first_error;
		std::mutex error_mutex;
		auto worker = [&]()
		{
			for (;;)
			{
				const std::size_t i = next.fetch_add(1);
				if (i >= n)
					return;
				try
				{
					fn(ctx, i);
				} catch (...)
				{
					std::lock_guard lock(error_mutex);
					if (!first_error)
						first_error = std::current_exception();
				}
			}
		};
		std::vector<std::thread> pool;
		pool.reserve(workers);
		for (std::size_t t = 0; t < workers; t++)
			pool.emplace_back(worker);
		for (auto &t : pool)
			t.join();
		if (first_error)
			std::rethrow_exception(first_error);
	}
}
