#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace radiolam::nn
{
	/// Feature maps are stored channels × pixels; pixel p = x * y_dim + y.
	using Mat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
	using Vec = Eigen::VectorXf;

	/// Named list of parameter tensors. Gradients and optimizer moments use the same layout.
	class ParamSet
	{
		public:
			/// Registers a zero tensor; fan_in drives init_uniform (0 means the column count).
			std::size_t add(std::string name, int rows, int cols, int fan_in = 0);

			std::size_t size() const noexcept
			{
				return m_tensors.size();
			}
			Mat& operator[](std::size_t i) noexcept
			{
				return m_tensors[i];
			}
			const Mat& operator[](std::size_t i) const noexcept
			{
				return m_tensors[i];
			}
			const std::string& name(std::size_t i) const noexcept
			{
				return m_names[i];
			}
			int fan_in(std::size_t i) const noexcept
			{
				return m_fan_in[i];
			}
			/// Total number of scalars.
			std::size_t scalar_count() const noexcept;

			/// Same names and shapes, all zeros.
			ParamSet zeros_like() const;
			void set_zero();
			/// this += scale * other; shapes must match.
			void add_scaled(const ParamSet &other, float scale);
			bool same_layout(const ParamSet &other) const noexcept;
			bool all_finite() const;

			friend bool operator==(const ParamSet &a, const ParamSet &b);

		private:
			std::vector<std::string> m_names;
			std::vector<Mat> m_tensors;
			std::vector<int> m_fan_in;
	};

	/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) init of every tensor from one seeded stream.
	void init_uniform(ParamSet &params, std::uint64_t seed);

	/// Columns of a 3×3 convolution with zero padding equal to the dilation.
	/// in is C × (X·Y); col becomes (9·C) × (X·Y) with row index c * 9 + ky * 3 + kx.
	void im2col(const Mat &in, int x_dim, int y_dim, int dilation, Mat &col);

	/// Adjoint of im2col: accumulates col back into grad_in (C × (X·Y)).
	void col2im_add(const Mat &col, int x_dim, int y_dim, int dilation, Mat &grad_in);

	/// out = W · im2col(in) + b; W is Cout × (9·Cin).
	void conv3x3(const Mat &in, int x_dim, int y_dim, int dilation, const Mat &weight, const Mat &bias, Mat &col, Mat &out);

	/// Sinusoidal timestep embedding: [sin(t·f_i), cos(t·f_i)], f_i = 10000^(-i / (dim/2)).
	Vec sinusoidal_embedding(int t, int dim);

	/// Numerically stable softmax.
	Vec softmax(const Vec &logits);

	struct AdamConfig
	{
		float lr = 1e-3f;
		float beta1 = 0.9f;
		float beta2 = 0.999f;
		float eps = 1e-8f;
	};

	class Adam
	{
		public:
			Adam() = default;
			Adam(const ParamSet &layout, AdamConfig cfg);

			/// One update with the given gradient. A zero learning rate leaves params untouched.
			void step(ParamSet &params, const ParamSet &grad);
			int steps() const noexcept
			{
				return m_t;
			}

		private:
			AdamConfig m_cfg;
			ParamSet m_m;
			ParamSet m_v;
			int m_t = 0;
	};

	/// FNV-1a over a description string; used to tag checkpoints with their architecture.
	std::uint64_t fnv1a(const std::string &text) noexcept;
}
