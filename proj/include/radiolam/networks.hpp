#pragma once

#include <radiolam/nn.hpp>

#include <string>

namespace radiolam
{
	inline constexpr int kCondChannels = 6;
	inline constexpr int kRouterChannels = 2;

	/// Reference noise-prediction network: conv 6->C with a timestep bias, ReLU, two residual
	/// ReLU conv blocks C->C, linear conv C->1. All kernels are 3×3.
	struct DenoiserArch
	{
		int channels = 32;
		int time_dim = 32;
		int dilation1 = 1;
		int dilation2 = 1;

		void validate() const;
		std::string describe() const;
		friend bool operator==(const DenoiserArch&, const DenoiserArch&) = default;
	};

	class Denoiser
	{
		public:
			struct Cache
			{
				nn::Mat col0, a1, h1, col1, a2, h2, col2, a3, h3, col3;
				nn::Vec emb;
				// backward scratch, kept so repeated calls reuse the allocations
				nn::Mat dcol, dh, da;
				int x_dim = 0;
				int y_dim = 0;
			};

			Denoiser() = default;
			explicit Denoiser(const DenoiserArch &arch);

			/// cond is kCondChannels × (X·Y) with the noisy map in channel 0; returns 1 × (X·Y).
			nn::Mat forward(const nn::Mat &cond, int x_dim, int y_dim, int t, Cache *cache = nullptr) const;
			/// Accumulates parameter gradients of <d_out, forward(...)> into grad.
			void backward(Cache &cache, const nn::Mat &d_out, nn::ParamSet &grad) const;

			const DenoiserArch& arch() const noexcept
			{
				return m_arch;
			}
			nn::ParamSet& params() noexcept
			{
				return m_params;
			}
			const nn::ParamSet& params() const noexcept
			{
				return m_params;
			}

			friend bool operator==(const Denoiser &a, const Denoiser &b)
			{
				return a.m_arch == b.m_arch && a.m_params == b.m_params;
			}

		private:
			enum Slot : std::size_t
			{
				w_in, b_in, w_time, b_time, w_res1, b_res1, w_res2, b_res2, w_out, b_out
			};

			DenoiserArch m_arch;
			nn::ParamSet m_params;
	};

	/// Compact routing classifier: conv 2->hidden, ReLU, global average pool, dense hidden->E, softmax.
	struct RouterArch
	{
		int hidden = 8;
		int experts = 4;

		void validate() const;
		std::string describe() const;
		friend bool operator==(const RouterArch&, const RouterArch&) = default;
	};

	class Router
	{
		public:
			struct Cache
			{
				nn::Mat col, a;
				nn::Vec pooled;
				nn::Vec weights;
				int x_dim = 0;
				int y_dim = 0;
			};

			Router() = default;
			explicit Router(const RouterArch &arch);

			/// input is kRouterChannels × (X·Y); returns softmax weights over the experts.
			nn::Vec forward(const nn::Mat &input, int x_dim, int y_dim, Cache *cache = nullptr) const;
			/// Accumulates parameter gradients given dL/dweights.
			void backward(const Cache &cache, const nn::Vec &d_weights, nn::ParamSet &grad) const;
			/// Accumulates gradients of the cross-entropy -log(weights[label]); returns the loss.
			double backward_cross_entropy(const Cache &cache, int label, nn::ParamSet &grad) const;

			const RouterArch& arch() const noexcept
			{
				return m_arch;
			}
			nn::ParamSet& params() noexcept
			{
				return m_params;
			}
			const nn::ParamSet& params() const noexcept
			{
				return m_params;
			}
			/// Zeroes the dense head so every expert gets weight 1/E.
			void zero_head();

			friend bool operator==(const Router &a, const Router &b)
			{
				return a.m_arch == b.m_arch && a.m_params == b.m_params;
			}

		private:
			enum Slot : std::size_t
			{
				w_conv, b_conv, w_dense, b_dense
			};

			RouterArch m_arch;
			nn::ParamSet m_params;
	};
}
