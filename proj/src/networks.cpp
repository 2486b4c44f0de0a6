#include <radiolam/networks.hpp>
#include <radiolam/common.hpp>

#include <cmath>
#include <sstream>

namespace radiolam
{
	using nn::Mat;
	using nn::Vec;

	namespace
	{
		void relu_inplace(const Mat &pre, Mat &out)
		{
			out.noalias() = pre.cwiseMax(0.0f);
		}

		/// out = d * (pre > 0)
		void relu_grad(const Mat &d, const Mat &pre, Mat &out)
		{
			out.resize(d.rows(), d.cols());
			out.array() = (pre.array() > 0.0f).select(d.array(), 0.0f);
		}
	}

	void DenoiserArch::validate() const
	{
		if (channels < 1 || time_dim < 2 || time_dim % 2 != 0)
			throw InvalidArgument("denoiser: invalid channel or embedding width");
		if (dilation1 < 1 || dilation2 < 1)
			throw InvalidArgument("denoiser: dilations must be positive");
	}

	std::string DenoiserArch::describe() const
	{
		std::ostringstream os;
		os << "denoiser:conv3x3(" << kCondChannels << "->" << channels << ")+time(" << time_dim << "->" << channels
				<< ");res(" << channels << ",d" << dilation1 << ");res(" << channels << ",d" << dilation2 << ");conv3x3("
				<< channels << "->1)";
		return os.str();
	}

	Denoiser::Denoiser(const DenoiserArch &arch) :
			m_arch(arch)
	{
		arch.validate();
		const int c = arch.channels;
		m_params.add("in.weight", c, 9 * kCondChannels);
		m_params.add("in.bias", c, 1, 9 * kCondChannels);
		m_params.add("time.weight", c, arch.time_dim);
		m_params.add("time.bias", c, 1, arch.time_dim);
		m_params.add("res1.weight", c, 9 * c);
		m_params.add("res1.bias", c, 1, 9 * c);
		m_params.add("res2.weight", c, 9 * c);
		m_params.add("res2.bias", c, 1, 9 * c);
		m_params.add("out.weight", 1, 9 * c);
		m_params.add("out.bias", 1, 1, 9 * c);
	}

	Mat Denoiser::forward(const Mat &cond, int x_dim, int y_dim, int t, Cache *cache) const
	{
		if (cond.rows() != kCondChannels || cond.cols() != x_dim * y_dim)
			throw DimensionMismatch("denoiser: conditioning tensor has the wrong shape");
		thread_local Cache local;
		Cache &c = cache != nullptr ? *cache : local;
		c.x_dim = x_dim;
		c.y_dim = y_dim;
		const nn::ParamSet &p = m_params;

		c.emb = nn::sinusoidal_embedding(t, m_arch.time_dim);
		const Vec time_bias = p[w_time] * c.emb + Vec(p[b_time].col(0));

		nn::conv3x3(cond, x_dim, y_dim, 1, p[w_in], p[b_in], c.col0, c.a1);
		c.a1.colwise() += time_bias;
		relu_inplace(c.a1, c.h1);

		nn::conv3x3(c.h1, x_dim, y_dim, m_arch.dilation1, p[w_res1], p[b_res1], c.col1, c.a2);
		c.h2.noalias() = c.h1 + c.a2.cwiseMax(0.0f);

		nn::conv3x3(c.h2, x_dim, y_dim, m_arch.dilation2, p[w_res2], p[b_res2], c.col2, c.a3);
		c.h3.noalias() = c.h2 + c.a3.cwiseMax(0.0f);

		Mat out;
		nn::conv3x3(c.h3, x_dim, y_dim, 1, p[w_out], p[b_out], c.col3, out);
		return out;
	}

	void Denoiser::backward(Cache &c, const Mat &d_out, nn::ParamSet &grad) const
	{
		const nn::ParamSet &p = m_params;
		const int X = c.x_dim, Y = c.y_dim;
		if (d_out.rows() != 1 || d_out.cols() != X * Y)
			throw DimensionMismatch("denoiser: output gradient has the wrong shape");
		Mat &dcol = c.dcol, &dh = c.dh, &da = c.da;

		grad[w_out].noalias() += d_out * c.col3.transpose();
		grad[b_out].col(0) += d_out.rowwise().sum();
		dcol.noalias() = p[w_out].transpose() * d_out;
		dh.setZero(c.h3.rows(), c.h3.cols());
		nn::col2im_add(dcol, X, Y, 1, dh);

		// residual block 2: h3 = h2 + relu(a3)
		relu_grad(dh, c.a3, da);
		grad[w_res2].noalias() += da * c.col2.transpose();
		grad[b_res2].col(0) += da.rowwise().sum();
		dcol.noalias() = p[w_res2].transpose() * da;
		nn::col2im_add(dcol, X, Y, m_arch.dilation2, dh);

		// residual block 1
		relu_grad(dh, c.a2, da);
		grad[w_res1].noalias() += da * c.col1.transpose();
		grad[b_res1].col(0) += da.rowwise().sum();
		dcol.noalias() = p[w_res1].transpose() * da;
		nn::col2im_add(dcol, X, Y, m_arch.dilation1, dh);

		// input conv with the timestep bias
		relu_grad(dh, c.a1, da);
		grad[w_in].noalias() += da * c.col0.transpose();
		const Vec dbias = da.rowwise().sum();
		grad[b_in].col(0) += dbias;
		grad[w_time].noalias() += dbias * c.emb.transpose();
		grad[b_time].col(0) += dbias;
	}

	void RouterArch::validate() const
	{
		if (hidden < 1 || experts < 1)
			throw InvalidArgument("router: invalid width");
	}

	std::string RouterArch::describe() const
	{
		std::ostringstream os;
		os << "router:conv3x3(" << kRouterChannels << "->" << hidden << ");avgpool;dense(" << hidden << "->" << experts
				<< ");softmax";
		return os.str();
	}

	Router::Router(const RouterArch &arch) :
			m_arch(arch)
	{
		arch.validate();
		m_params.add("conv.weight", arch.hidden, 9 * kRouterChannels);
		m_params.add("conv.bias", arch.hidden, 1, 9 * kRouterChannels);
		m_params.add("dense.weight", arch.experts, arch.hidden);
		m_params.add("dense.bias", arch.experts, 1, arch.hidden);
	}

	void Router::zero_head()
	{
		m_params[w_dense].setZero();
		m_params[b_dense].setZero();
	}

	Vec Router::forward(const Mat &input, int x_dim, int y_dim, Cache *cache) const
	{
		if (input.rows() != kRouterChannels || input.cols() != x_dim * y_dim)
			throw DimensionMismatch("router: input has the wrong shape");
		Cache local;
		Cache &c = cache != nullptr ? *cache : local;
		c.x_dim = x_dim;
		c.y_dim = y_dim;
		nn::conv3x3(input, x_dim, y_dim, 1, m_params[w_conv], m_params[b_conv], c.col, c.a);
		c.pooled = c.a.cwiseMax(0.0f).rowwise().mean();
		const Vec logits = m_params[w_dense] * c.pooled + Vec(m_params[b_dense].col(0));
		c.weights = nn::softmax(logits);
		return c.weights;
	}

	void Router::backward(const Cache &c, const Vec &d_weights, nn::ParamSet &grad) const
	{
		if (d_weights.size() != c.weights.size())
			throw DimensionMismatch("router: weight gradient has the wrong length");
		// softmax Jacobian: dz = w * (dw - <w, dw>)
		const float inner = c.weights.dot(d_weights);
		const Vec dlogits = c.weights.cwiseProduct((d_weights.array() - inner).matrix());
		grad[w_dense].noalias() += dlogits * c.pooled.transpose();
		grad[b_dense].col(0) += dlogits;
		const Vec dpooled = m_params[w_dense].transpose() * dlogits;
		const float inv = 1.0f / static_cast<float>(c.a.cols());
		Mat da = (c.a.array() > 0.0f).cast<float>().matrix();
		da.array().colwise() *= (dpooled * inv).array();
		grad[w_conv].noalias() += da * c.col.transpose();
		grad[b_conv].col(0) += da.rowwise().sum();
	}

	double Router::backward_cross_entropy(const Cache &c, int label, nn::ParamSet &grad) const
	{
		if (label < 0 || label >= c.weights.size())
			throw InvalidArgument("router: label out of range");
		// d(-log w_label)/dlogits = w - onehot, expressed through dL/dw for backward()
		Vec dw = Vec::Zero(c.weights.size());
		const float wl = std::max(c.weights(label), 1e-30f);
		dw(label) = -1.0f / wl;
		backward(c, dw, grad);
		return -std::log(static_cast<double>(wl));
	}
}
