#include <radiolam/nn.hpp>
#include <radiolam/common.hpp>

#include <cmath>
#include <random>

namespace radiolam::nn
{
	std::size_t ParamSet::add(std::string name, int rows, int cols, int fan_in)
	{
		if (rows <= 0 || cols <= 0)
			throw InvalidArgument("parameter tensor needs positive dimensions");
		m_names.push_back(std::move(name));
		m_tensors.push_back(Mat::Zero(rows, cols));
		m_fan_in.push_back(fan_in > 0 ? fan_in : cols);
		return m_tensors.size() - 1;
	}

	std::size_t ParamSet::scalar_count() const noexcept
	{
		std::size_t n = 0;
		for (const Mat &t : m_tensors)
			n += static_cast<std::size_t>(t.size());
		return n;
	}

	ParamSet ParamSet::zeros_like() const
	{
		ParamSet result = *this;
		result.set_zero();
		return result;
	}

	void ParamSet::set_zero()
	{
		for (Mat &t : m_tensors)
			t.setZero();
	}

	void ParamSet::add_scaled(const ParamSet &other, float scale)
	{
		if (!same_layout(other))
			throw InvalidArgument("parameter sets differ in layout");
		for (std::size_t i = 0; i < m_tensors.size(); i++)
			m_tensors[i] += scale * other.m_tensors[i];
	}

	bool ParamSet::same_layout(const ParamSet &other) const noexcept
	{
		if (m_tensors.size() != other.m_tensors.size())
			return false;
		for (std::size_t i = 0; i < m_tensors.size(); i++)
			if (m_tensors[i].rows() != other.m_tensors[i].rows() || m_tensors[i].cols() != other.m_tensors[i].cols())
				return false;
		return true;
	}

	bool ParamSet::all_finite() const
	{
		for (const Mat &t : m_tensors)
			if (!t.allFinite())
				return false;
		return true;
	}

	bool operator==(const ParamSet &a, const ParamSet &b)
	{
		if (a.m_names != b.m_names || a.m_fan_in != b.m_fan_in || !a.same_layout(b))
			return false;
		for (std::size_t i = 0; i < a.m_tensors.size(); i++)
			if (a.m_tensors[i] != b.m_tensors[i])
				return false;
		return true;
	}

	void init_uniform(ParamSet &params, std::uint64_t seed)
	{
		std::mt19937_64 rng(seed);
		for (std::size_t i = 0; i < params.size(); i++)
		{
			const float bound = 1.0f / std::sqrt(static_cast<float>(params.fan_in(i)));
			std::uniform_real_distribution<float> dist(-bound, bound);
			Mat &t = params[i];
			for (Eigen::Index k = 0; k < t.size(); k++)
				t.data()[k] = dist(rng);
		}
	}

	void im2col(const Mat &in, int x_dim, int y_dim, int dilation, Mat &col)
	{
		const int channels = static_cast<int>(in.rows());
		const int pixels = x_dim * y_dim;
		if (in.cols() != pixels)
			throw DimensionMismatch("im2col: input does not match the grid");
		col.resize(9 * channels, pixels);
		for (int c = 0; c < channels; c++)
		{
			const float *src = in.row(c).data();
			for (int ky = 0; ky < 3; ky++)
				for (int kx = 0; kx < 3; kx++)
				{
					float *dst = col.row(c * 9 + ky * 3 + kx).data();
					const int dx = (ky - 1) * dilation;
					const int dy = (kx - 1) * dilation;
					for (int x = 0; x < x_dim; x++)
					{
						const int sx = x + dx;
						float *row = dst + x * y_dim;
						if (sx < 0 || sx >= x_dim)
						{
							std::fill(row, row + y_dim, 0.0f);
							continue;
						}
						const float *srow = src + sx * y_dim;
						for (int y = 0; y < y_dim; y++)
						{
							const int sy = y + dy;
							row[y] = (sy >= 0 && sy < y_dim) ? srow[sy] : 0.0f;
						}
					}
				}
		}
	}

	void col2im_add(const Mat &col, int x_dim, int y_dim, int dilation, Mat &grad_in)
	{
		const int channels = static_cast<int>(col.rows() / 9);
		const int pixels = x_dim * y_dim;
		if (col.cols() != pixels || grad_in.rows() != channels || grad_in.cols() != pixels)
			throw DimensionMismatch("col2im: shapes do not match");
		for (int c = 0; c < channels; c++)
		{
			float *dst = grad_in.row(c).data();
			for (int ky = 0; ky < 3; ky++)
				for (int kx = 0; kx < 3; kx++)
				{
					const float *src = col.row(c * 9 + ky * 3 + kx).data();
					const int dx = (ky - 1) * dilation;
					const int dy = (kx - 1) * dilation;
					for (int x = 0; x < x_dim; x++)
					{
						const int sx = x + dx;
						if (sx < 0 || sx >= x_dim)
							continue;
						const float *row = src + x * y_dim;
						float *drow = dst + sx * y_dim;
						for (int y = 0; y < y_dim; y++)
						{
							const int sy = y + dy;
							if (sy >= 0 && sy < y_dim)
								drow[sy] += row[y];
						}
					}
				}
		}
	}

	void conv3x3(const Mat &in, int x_dim, int y_dim, int dilation, const Mat &weight, const Mat &bias, Mat &col, Mat &out)
	{
		if (weight.cols() != 9 * in.rows() || bias.rows() != weight.rows() || bias.cols() != 1)
			throw DimensionMismatch("conv3x3: weight shape does not match the input channels");
		im2col(in, x_dim, y_dim, dilation, col);
		out.noalias() = weight * col;
		out.colwise() += bias.col(0);
	}

	Vec sinusoidal_embedding(int t, int dim)
	{
		if (dim < 2 || dim % 2 != 0)
			throw InvalidArgument("embedding dimension must be even");
		const int half = dim / 2;
		Vec emb(dim);
		for (int i = 0; i < half; i++)
		{
			const double freq = std::exp(-std::log(10000.0) * i / half);
			emb(i) = static_cast<float>(std::sin(t * freq));
			emb(half + i) = static_cast<float>(std::cos(t * freq));
		}
		return emb;
	}

	Vec softmax(const Vec &logits)
	{
		const float top = logits.maxCoeff();
		Vec e = (logits.array() - top).exp().matrix();
		return e / e.sum();
	}

	Adam::Adam(const ParamSet &layout, AdamConfig cfg) :
			m_cfg(cfg),
			m_m(layout.zeros_like()),
			m_v(layout.zeros_like())
	{
	}

	void Adam::step(ParamSet &params, const ParamSet &grad)
	{
		if (!params.same_layout(grad) || !params.same_layout(m_m))
			throw InvalidArgument("Adam: parameter layout mismatch");
		m_t++;
		if (m_cfg.lr == 0.0f)
			return;
		const float b1 = m_cfg.beta1, b2 = m_cfg.beta2;
		const float c1 = 1.0f - static_cast<float>(std::pow(double(b1), m_t));
		const float c2 = 1.0f - static_cast<float>(std::pow(double(b2), m_t));
		for (std::size_t i = 0; i < params.size(); i++)
		{
			auto m = m_m[i].array();
			auto v = m_v[i].array();
			const auto g = grad[i].array();
			m = b1 * m + (1.0f - b1) * g;
			v = b2 * v + (1.0f - b2) * g * g;
			params[i].array() -= m_cfg.lr * (m / c1) / ((v / c2).sqrt() + m_cfg.eps);
		}
	}

	std::uint64_t fnv1a(const std::string &text) noexcept
	{
		std::uint64_t h = 1469598103934665603ull;
		for (unsigned char c : text)
		{
			h ^= c;
			h *= 1099511628211ull;
		}
		return h;
	}
}
