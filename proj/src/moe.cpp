#include <radiolam/moe.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

namespace radiolam
{
	using nn::Mat;
	using nn::Vec;

	CondStatic make_cond_static(const augment::ProjectedSet &projected, const BuildingMask &buildings,
			const TerrainMap &terrain, const GridSpec &grid)
	{
		grid.validate();
		if (!buildings.matches(grid) || terrain.elevation.x_dim != grid.x_dim || terrain.elevation.y_dim != grid.y_dim)
			throw DimensionMismatch("conditioning: geometry does not match the grid");
		const int h_t = projected.target_h;
		if (h_t < 0 || h_t >= grid.h_dim)
			throw InvalidArgument("conditioning: target height index out of range");
		CondStatic c;
		c.values = Map2D(grid.x_dim, grid.y_dim);
		c.mask = Map2D(grid.x_dim, grid.y_dim);
		for (const augment::ProjectedSample &e : projected.entries)
		{
			if (e.x < 0 || e.y < 0 || e.x >= grid.x_dim || e.y >= grid.y_dim)
				throw InvalidArgument("conditioning: projected sample outside the grid");
			if (e.dropped)
				continue;
			// several samples can share a column once projected; keep the largest value
			c.values.at(e.x, e.y) = c.mask.at(e.x, e.y) > 0.0f ? std::max(c.values.at(e.x, e.y), e.rss_hat) : e.rss_hat;
			c.mask.at(e.x, e.y) = 1.0f;
		}
		c.buildings = buildings.slice(h_t);
		c.terrain = Map2D(grid.x_dim, grid.y_dim);
		for (std::size_t i = 0; i < c.terrain.size(); i++)
			c.terrain.data[i] = static_cast<float>(terrain.elevation.data[i] / kTerrainScaleM);
		c.height = static_cast<float>(grid.heights_m[static_cast<std::size_t>(h_t)] / grid.heights_m.back());
		return c;
	}

	Mat make_cond_tensor(const Map2D &x_t, const CondStatic &cond)
	{
		const Eigen::Index p = static_cast<Eigen::Index>(x_t.size());
		if (!x_t.same_shape(cond.values) || !x_t.same_shape(cond.mask) || !x_t.same_shape(cond.buildings)
				|| !x_t.same_shape(cond.terrain))
			throw DimensionMismatch("conditioning channels differ in shape");
		Mat m(kCondChannels, p);
		m.row(0) = Eigen::Map<const Eigen::RowVectorXf>(x_t.data.data(), p);
		m.row(1) = Eigen::Map<const Eigen::RowVectorXf>(cond.values.data.data(), p);
		m.row(2) = Eigen::Map<const Eigen::RowVectorXf>(cond.mask.data.data(), p);
		m.row(3) = Eigen::Map<const Eigen::RowVectorXf>(cond.buildings.data.data(), p);
		m.row(4) = Eigen::Map<const Eigen::RowVectorXf>(cond.terrain.data.data(), p);
		m.row(5).setConstant(cond.height);
		return m;
	}

	Mat make_router_input(const BuildingMask &buildings, const TerrainMap &terrain)
	{
		const Map2D ground = buildings.slice(0);
		if (!ground.same_shape(terrain.elevation))
			throw DimensionMismatch("router input: building and terrain shapes differ");
		const Eigen::Index p = static_cast<Eigen::Index>(ground.size());
		Mat m(kRouterChannels, p);
		m.row(0) = Eigen::Map<const Eigen::RowVectorXf>(ground.data.data(), p);
		for (Eigen::Index i = 0; i < p; i++)
			m(1, i) = static_cast<float>(terrain.elevation.data[static_cast<std::size_t>(i)] / kTerrainScaleM);
		return m;
	}

	void MoEParams::validate() const
	{
		if (domain_experts.empty())
			throw InvalidArgument("mixture needs at least one domain expert");
		for (const ExpertParams &e : domain_experts)
			if (!(e.net.arch() == shared.net.arch()) || !e.net.params().same_layout(shared.net.params()))
				throw InvalidArgument("all experts must share one architecture");
		if (router.arch().experts != static_cast<int>(domain_experts.size()))
			throw InvalidArgument("router width does not match the number of domain experts");
		if (schedule.t_max < 2)
			throw InvalidArgument("mixture has no diffusion schedule");
	}

	std::uint64_t MoEParams::architecture_hash() const
	{
		return nn::fnv1a(shared.net.arch().describe() + "|" + router.arch().describe());
	}

	namespace
	{
		Map2D to_map(const Mat &row, int x_dim, int y_dim)
		{
			Map2D m(x_dim, y_dim);
			std::copy(row.data(), row.data() + row.size(), m.data.begin());
			return m;
		}

		Mat to_row(const Map2D &m)
		{
			return Eigen::Map<const Mat>(m.data.data(), 1, static_cast<Eigen::Index>(m.size()));
		}

		void check_config(const TrainConfig &cfg)
		{
			if (cfg.epochs < 0 || cfg.batch_size < 1 || !(cfg.lr >= 0.0f))
				throw InvalidArgument("invalid training configuration");
		}

		/// Per-item draw of (t, eps) for a given epoch.
		struct Draw
		{
			int t;
			Map2D eps;
		};

		Draw draw_noise(std::uint64_t seed, int t_max, int x_dim, int y_dim)
		{
			std::mt19937_64 rng(seed);
			std::uniform_int_distribution<int> pick(0, t_max - 1);
			const int t = pick(rng);
			return Draw { t, gaussian_map(x_dim, y_dim, rng()) };
		}

		std::vector<std::size_t> shuffled(std::vector<std::size_t> order, std::uint64_t seed)
		{
			std::mt19937_64 rng(seed);
			std::shuffle(order.begin(), order.end(), rng);
			return order;
		}

		/// Runs per-item work in slots of one batch, then reduces the slots in order.
		template<typename Work, typename Reduce>
		void run_batches(const std::vector<std::size_t> &order, int batch_size, int threads, Work &&work, Reduce &&reduce)
		{
			for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(batch_size))
			{
				const std::size_t count = std::min<std::size_t>(static_cast<std::size_t>(batch_size), order.size() - start);
				parallel_for(count, threads, [&](std::size_t j)
				{
					work(j, start + j, order[start + j]);
				});
				reduce(count);
			}
		}
	}

	ExpertParams train_expert(const std::vector<TrainItem> &items, const DenoiserArch &arch, const DiffusionSchedule &schedule,
			const TrainConfig &cfg, std::uint64_t seed, std::optional<EnvLabel> domain, std::vector<double> *loss_log)
	{
		check_config(cfg);
		std::vector<std::size_t> idx;
		for (std::size_t i = 0; i < items.size(); i++)
			if (!domain || items[i].env == *domain)
				idx.push_back(i);
		if (idx.empty())
			throw InsufficientData(domain ? "no training scenes for domain " + std::string(to_string(*domain))
					: std::string("empty training set"));

		ExpertParams expert;
		expert.net = Denoiser(arch);
		expert.domain = domain ? std::string(to_string(*domain)) : "shared";
		expert.expert_id = domain ? static_cast<int>(*domain) + 1 : 0;
		nn::init_uniform(expert.net.params(), mix_seed(seed, 0));
		nn::Adam adam(expert.net.params(), nn::AdamConfig { cfg.lr });

		const std::size_t slots = static_cast<std::size_t>(cfg.batch_size);
		std::vector<nn::ParamSet> grads(slots, expert.net.params().zeros_like());
		std::vector<Denoiser::Cache> caches(slots);
		std::vector<double> losses(slots, 0.0);
		nn::ParamSet total = expert.net.params().zeros_like();

		for (int epoch = 0; epoch < cfg.epochs; epoch++)
		{
			const std::uint64_t epoch_seed = mix_seed(seed, 1 + static_cast<std::uint64_t>(epoch));
			const std::vector<std::size_t> order = shuffled(idx, mix_seed(epoch_seed, 0));
			double epoch_loss = 0.0;
			run_batches(order, cfg.batch_size, cfg.threads, [&](std::size_t slot, std::size_t pos, std::size_t item_index)
			{
				const TrainItem &item = items[item_index];
				const int X = item.truth.x_dim, Y = item.truth.y_dim;
				const Draw d = draw_noise(mix_seed(epoch_seed, 1 + pos), schedule.t_max, X, Y);
				const Map2D x_t = forward_diffuse(item.truth, d.t, d.eps, schedule);
				Denoiser::Cache &cache = caches[slot];
				const Mat out = expert.net.forward(make_cond_tensor(x_t, item.cond), X, Y, d.t, &cache);
				const Mat diff = out - to_row(d.eps);
				losses[slot] = diff.squaredNorm() / static_cast<double>(diff.size());
				grads[slot].set_zero();
				expert.net.backward(cache, diff * (2.0f / static_cast<float>(diff.size())), grads[slot]);
			}, [&](std::size_t count)
			{
				total.set_zero();
				for (std::size_t j = 0; j < count; j++)
				{
					total.add_scaled(grads[j], 1.0f / static_cast<float>(count));
					epoch_loss += losses[j];
				}
				adam.step(expert.net.params(), total);
			});
			if (loss_log != nullptr)
				loss_log->push_back(epoch_loss / static_cast<double>(order.size()));
		}
		return expert;
	}

	Router train_router(const std::vector<RouterItem> &items, const RouterArch &arch, const TrainConfig &cfg, int x_dim, int y_dim,
			std::uint64_t seed, std::vector<double> *loss_log)
	{
		check_config(cfg);
		std::set<int> labels;
		for (const RouterItem &it : items)
		{
			if (it.label < 0 || it.label >= arch.experts)
				throw InvalidArgument("router label out of range");
			labels.insert(it.label);
		}
		if (labels.size() < 2)
			throw InsufficientData("router training needs at least two distinct labels");

		Router router(arch);
		nn::init_uniform(router.params(), mix_seed(seed, 0));
		nn::Adam adam(router.params(), nn::AdamConfig { cfg.lr });
		std::vector<std::size_t> idx(items.size());
		std::iota(idx.begin(), idx.end(), 0);

		const std::size_t slots = static_cast<std::size_t>(cfg.batch_size);
		std::vector<nn::ParamSet> grads(slots, router.params().zeros_like());
		std::vector<double> losses(slots, 0.0);
		nn::ParamSet total = router.params().zeros_like();
		for (int epoch = 0; epoch < cfg.epochs; epoch++)
		{
			const std::vector<std::size_t> order = shuffled(idx, mix_seed(seed, 1 + static_cast<std::uint64_t>(epoch)));
			double epoch_loss = 0.0;
			run_batches(order, cfg.batch_size, cfg.threads, [&](std::size_t slot, std::size_t, std::size_t item_index)
			{
				Router::Cache cache;
				router.forward(items[item_index].input, x_dim, y_dim, &cache);
				grads[slot].set_zero();
				losses[slot] = router.backward_cross_entropy(cache, items[item_index].label, grads[slot]);
			}, [&](std::size_t count)
			{
				total.set_zero();
				for (std::size_t j = 0; j < count; j++)
				{
					total.add_scaled(grads[j], 1.0f / static_cast<float>(count));
					epoch_loss += losses[j];
				}
				adam.step(router.params(), total);
			});
			if (loss_log != nullptr)
				loss_log->push_back(epoch_loss / static_cast<double>(order.size()));
		}
		return router;
	}

	RouteResult route(const Router &router, const Mat &router_input, int x_dim, int y_dim)
	{
		RouteResult r;
		r.weights = router.forward(router_input, x_dim, y_dim);
		for (Eigen::Index e = 1; e < r.weights.size(); e++)
			if (r.weights(e) > r.weights(r.top))
				r.top = static_cast<int>(e);
		return r;
	}

	RouteResult route(const Router &router, const Map2D &building_slice, const TerrainMap &terrain)
	{
		if (!building_slice.same_shape(terrain.elevation))
			throw DimensionMismatch("route: building slice and terrain differ in shape");
		const Eigen::Index p = static_cast<Eigen::Index>(building_slice.size());
		Mat input(kRouterChannels, p);
		for (Eigen::Index i = 0; i < p; i++)
		{
			input(0, i) = building_slice.data[static_cast<std::size_t>(i)];
			input(1, i) = static_cast<float>(terrain.elevation.data[static_cast<std::size_t>(i)] / kTerrainScaleM);
		}
		return route(router, input, building_slice.x_dim, building_slice.y_dim);
	}

	Map2D cfg_fuse(const Map2D &eps_shared, const Map2D &eps_domain, double w_top, double g, double eta)
	{
		if (!eps_shared.same_shape(eps_domain))
			throw DimensionMismatch("cfg_fuse: maps differ in shape");
		const double gain = (g + eta) * w_top;
		Map2D out(eps_shared.x_dim, eps_shared.y_dim);
		for (std::size_t i = 0; i < out.size(); i++)
			out.data[i] = static_cast<float>(eps_shared.data[i] + gain * (double(eps_domain.data[i]) - eps_shared.data[i]));
		return out;
	}

	namespace
	{
		struct MoEGrad
		{
			nn::ParamSet shared;
			std::vector<nn::ParamSet> domain;
			nn::ParamSet router;

			void set_zero()
			{
				shared.set_zero();
				for (nn::ParamSet &d : domain)
					d.set_zero();
				router.set_zero();
			}
		};

		MoEGrad zero_grad(const MoEParams &moe)
		{
			MoEGrad g;
			g.shared = moe.shared.net.params().zeros_like();
			for (const ExpertParams &e : moe.domain_experts)
				g.domain.push_back(e.net.params().zeros_like());
			g.router = moe.router.params().zeros_like();
			return g;
		}

		struct FusedCache
		{
			Router::Cache router;
			Denoiser::Cache shared;
			std::vector<Denoiser::Cache> domain;
		};

		/// Fused loss of one item; with grad set, accumulates gradients of every network.
		double fused_item(const MoEParams &moe, const TrainItem &item, const Draw &d, MoEGrad *grad, FusedCache &fc)
		{
			const int X = item.truth.x_dim, Y = item.truth.y_dim;
			const std::size_t E = moe.domain_experts.size();
			const double g = moe.guidance_scale;
			const Map2D x_t = forward_diffuse(item.truth, d.t, d.eps, moe.schedule);
			const Mat cond = make_cond_tensor(x_t, item.cond);

			Router::Cache &rcache = fc.router;
			const Vec w = moe.router.forward(item.router_input, X, Y, &rcache);
			Denoiser::Cache &scache = fc.shared;
			const Mat eps_s = moe.shared.net.forward(cond, X, Y, d.t, &scache);
			std::vector<Denoiser::Cache> &dcache = fc.domain;
			dcache.resize(E);
			std::vector<Mat> eps_d(E);
			Mat fused = eps_s;
			for (std::size_t e = 0; e < E; e++)
			{
				eps_d[e] = moe.domain_experts[e].net.forward(cond, X, Y, d.t, &dcache[e]);
				fused += static_cast<float>(g * w(static_cast<Eigen::Index>(e))) * (eps_d[e] - eps_s);
			}
			const Mat diff = fused - to_row(d.eps);
			const double loss = diff.squaredNorm() / static_cast<double>(diff.size());
			if (grad == nullptr)
				return loss;

			const Mat dfused = diff * (2.0f / static_cast<float>(diff.size()));
			double wsum = 0.0;
			Vec dw(static_cast<Eigen::Index>(E));
			for (std::size_t e = 0; e < E; e++)
			{
				const float we = w(static_cast<Eigen::Index>(e));
				wsum += we;
				moe.domain_experts[e].net.backward(dcache[e], dfused * static_cast<float>(g * we), grad->domain[e]);
				dw(static_cast<Eigen::Index>(e)) = static_cast<float>(g * dfused.cwiseProduct(eps_d[e] - eps_s).sum());
			}
			moe.shared.net.backward(scache, dfused * static_cast<float>(1.0 - g * wsum), grad->shared);
			moe.router.backward(rcache, dw, grad->router);
			return loss;
		}
	}

	MoEParams fine_tune(const MoEParams &moe, const std::vector<TrainItem> &items, const TrainConfig &cfg, std::uint64_t seed,
			std::vector<double> *loss_log)
	{
		check_config(cfg);
		moe.validate();
		if (items.empty())
			throw InsufficientData("fine-tuning needs a non-empty dataset");
		MoEParams out = moe;
		const std::size_t E = out.domain_experts.size();
		const nn::AdamConfig acfg { cfg.lr };
		nn::Adam adam_shared(out.shared.net.params(), acfg);
		std::vector<nn::Adam> adam_domain;
		for (const ExpertParams &e : out.domain_experts)
			adam_domain.emplace_back(e.net.params(), acfg);
		nn::Adam adam_router(out.router.params(), acfg);

		std::vector<std::size_t> idx(items.size());
		std::iota(idx.begin(), idx.end(), 0);
		const std::size_t slots = static_cast<std::size_t>(cfg.batch_size);
		std::vector<MoEGrad> grads(slots, zero_grad(out));
		std::vector<FusedCache> caches(slots);
		std::vector<double> losses(slots, 0.0);
		MoEGrad total = zero_grad(out);

		for (int epoch = 0; epoch < cfg.epochs; epoch++)
		{
			const std::uint64_t epoch_seed = mix_seed(seed, 1 + static_cast<std::uint64_t>(epoch));
			const std::vector<std::size_t> order = shuffled(idx, mix_seed(epoch_seed, 0));
			double epoch_loss = 0.0;
			run_batches(order, cfg.batch_size, cfg.threads, [&](std::size_t slot, std::size_t pos, std::size_t item_index)
			{
				const TrainItem &item = items[item_index];
				const Draw d = draw_noise(mix_seed(epoch_seed, 1 + pos), out.schedule.t_max, item.truth.x_dim, item.truth.y_dim);
				grads[slot].set_zero();
				losses[slot] = fused_item(out, item, d, &grads[slot], caches[slot]);
			}, [&](std::size_t count)
			{
				total.set_zero();
				const float scale = 1.0f / static_cast<float>(count);
				for (std::size_t j = 0; j < count; j++)
				{
					total.shared.add_scaled(grads[j].shared, scale);
					for (std::size_t e = 0; e < E; e++)
						total.domain[e].add_scaled(grads[j].domain[e], scale);
					total.router.add_scaled(grads[j].router, scale);
					epoch_loss += losses[j];
				}
				adam_shared.step(out.shared.net.params(), total.shared);
				for (std::size_t e = 0; e < E; e++)
					adam_domain[e].step(out.domain_experts[e].net.params(), total.domain[e]);
				adam_router.step(out.router.params(), total.router);
			});
			if (loss_log != nullptr)
				loss_log->push_back(epoch_loss / static_cast<double>(order.size()));
		}
		out.meta.finetune_epochs = moe.meta.finetune_epochs + cfg.epochs;
		return out;
	}

	double fused_loss(const MoEParams &moe, const std::vector<TrainItem> &items, std::uint64_t seed)
	{
		moe.validate();
		if (items.empty())
			throw InsufficientData("fused loss needs a non-empty dataset");
		double sum = 0.0;
		FusedCache cache;
		for (std::size_t i = 0; i < items.size(); i++)
		{
			const Draw d = draw_noise(mix_seed(seed, i), moe.schedule.t_max, items[i].truth.x_dim, items[i].truth.y_dim);
			sum += fused_item(moe, items[i], d, nullptr, cache);
		}
		return sum / static_cast<double>(items.size());
	}

	Map2D ddim_sample(const MoEParams &moe, const CondStatic &cond, const Mat &router_input, const SampleOptions &options,
			std::uint64_t seed, double sigma_t, SampleTrace *trace)
	{
		moe.validate();
		if (!(sigma_t >= 0.0))
			throw InvalidArgument("guidance noise level must be non-negative");
		const int X = cond.values.x_dim, Y = cond.values.y_dim;
		const RouteResult r = route(moe.router, router_input, X, Y);
		const ExpertParams &domain = moe.domain_experts[static_cast<std::size_t>(r.top)];
		const double w_top = r.weights(r.top);

		std::mt19937_64 rng(mix_seed(seed, 1));
		std::normal_distribution<double> normal(0.0, 1.0);
		const double eta = sigma_t * normal(rng);
		if (trace != nullptr)
			*trace = SampleTrace { eta, r.top, w_top };

		const NoisePredictor predict = [&](const Map2D &x_t, int t)
		{
			const Mat c = make_cond_tensor(x_t, cond);
			const Map2D eps_s = to_map(moe.shared.net.forward(c, X, Y, t), X, Y);
			const Map2D eps_d = to_map(domain.net.forward(c, X, Y, t), X, Y);
			return cfg_fuse(eps_s, eps_d, w_top, moe.guidance_scale, eta);
		};
		const Map2D x_start = gaussian_map(X, Y, mix_seed(seed, 0));
		return radiolam::ddim_sample(moe.schedule, x_start, predict, DdimOptions { options.steps, options.clip_intermediate });
	}

	CandidateSet generate_candidates(const MoEParams &moe, const CondStatic &cond, const Mat &router_input,
			const SampleOptions &options, int m, std::uint64_t seed, double sigma_t, int threads)
	{
		if (m < 1)
			throw InvalidArgument("candidate count must be at least 1");
		const std::size_t M = static_cast<std::size_t>(m);
		CandidateSet set;
		set.candidates.resize(M);
		set.seeds.resize(M);
		set.etas.resize(M);
		set.sigma_trace.assign(M, sigma_t);
		for (std::size_t i = 0; i < M; i++)
			set.seeds[i] = mix_seed(seed, i);
		parallel_for(M, threads, [&](std::size_t i)
		{
			SampleTrace trace;
			set.candidates[i] = ddim_sample(moe, cond, router_input, options, set.seeds[i], sigma_t, &trace);
			set.etas[i] = trace.eta;
		});
		return set;
	}
}
