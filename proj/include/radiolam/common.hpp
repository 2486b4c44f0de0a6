#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

namespace radiolam
{
	// Error types. Everything derives from std::runtime_error or
	// std::invalid_argument so callers can catch broadly or precisely.

	/// Precondition violated by the caller.
	class InvalidArgument : public std::invalid_argument
	{
		public:
			using std::invalid_argument::invalid_argument;
	};

	/// Not enough samples (or scenes) for the requested estimate.
	class InsufficientData : public std::runtime_error
	{
		public:
			using std::runtime_error::runtime_error;
	};

	class IoError : public std::runtime_error
	{
		public:
			using std::runtime_error::runtime_error;
	};

	/// File exists but its header or syntax is wrong.
	class FormatError : public IoError
	{
		public:
			using IoError::IoError;
	};

	class DimensionMismatch : public IoError
	{
		public:
			using IoError::IoError;
	};

	class MissingFile : public IoError
	{
		public:
			using IoError::IoError;
	};

	struct Vec3
	{
		double x = 0.0;
		double y = 0.0;
		double z = 0.0;

		friend bool operator==(const Vec3&, const Vec3&) = default;
	};

	double distance(const Vec3 &a, const Vec3 &b) noexcept;

	/// Dense x_dim × y_dim plane of floats, index (x, y) -> x * y_dim + y.
	struct Map2D
	{
		int x_dim = 0;
		int y_dim = 0;
		std::vector<float> data;

		Map2D() = default;
		Map2D(int x, int y, float fill = 0.0f);

		float& at(int x, int y) noexcept
		{
			return data[static_cast<std::size_t>(x) * y_dim + y];
		}
		float at(int x, int y) const noexcept
		{
			return data[static_cast<std::size_t>(x) * y_dim + y];
		}
		std::size_t size() const noexcept
		{
			return data.size();
		}
		bool same_shape(const Map2D &other) const noexcept
		{
			return x_dim == other.x_dim && y_dim == other.y_dim;
		}

		friend bool operator==(const Map2D&, const Map2D&) = default;
	};

	/// Stateless 64-bit mixer used to derive independent seeds from (seed, index).
	std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) noexcept;

	/// Runs body(i) for i in [0, n) on up to `threads` workers. Work items must be independent.
	template<typename Body>
	void parallel_for(std::size_t n, int threads, Body &&body);

	void parallel_for_impl(std::size_t n, int threads, void (*fn)(void*, std::size_t), void *ctx);

	template<typename Body>
	void parallel_for(std::size_t n, int threads, Body &&body)
	{
		using B = std::remove_reference_t<Body>;
		auto trampoline = [](void *ctx, std::size_t i)
		{
			(*static_cast<B*>(ctx))(i);
		};
		parallel_for_impl(n, threads, trampoline, const_cast<void*>(static_cast<const void*>(&body)));
	}
}
