#pragma once

#include <radiolam/augment.hpp>
#include <radiolam/diffusion.hpp>
#include <radiolam/networks.hpp>
#include <radiolam/scene.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace radiolam
{
	/// Terrain elevations are divided by this before entering a network.
	inline constexpr double kTerrainScaleM = 100.0;

	/// The five conditioning channels that stay fixed during sampling.
	struct CondStatic
	{
		Map2D values;
		Map2D mask;
		Map2D buildings;
		Map2D terrain;
		float height = 0.0f;
	};

	/// Projected values (0 where absent or dropped), their 0/1 mask, the building slice at h_t,
	/// terrain / kTerrainScaleM and h_t's altitude divided by the top altitude.
	CondStatic make_cond_static(const augment::ProjectedSet &projected, const BuildingMask &buildings,
			const TerrainMap &terrain, const GridSpec &grid);

	/// Stacks x_t in front of the static channels: kCondChannels × (X·Y).
	nn::Mat make_cond_tensor(const Map2D &x_t, const CondStatic &cond);

	/// Ground-level building slice and scaled terrain: kRouterChannels × (X·Y).
	nn::Mat make_router_input(const BuildingMask &buildings, const TerrainMap &terrain);

	struct ExpertParams
	{
		Denoiser net;
		int expert_id = 0;
		/// "shared" or an environment label.
		std::string domain = "shared";

		friend bool operator==(const ExpertParams&, const ExpertParams&) = default;
	};

	struct TrainingMeta
	{
		std::uint64_t seed = 0;
		int expert_epochs = 0;
		int router_epochs = 0;
		int finetune_epochs = 0;
		/// Election variance threshold calibrated after training.
		double var_threshold = 1.0;

		friend bool operator==(const TrainingMeta&, const TrainingMeta&) = default;
	};

	struct MoEParams
	{
		ExpertParams shared;
		std::vector<ExpertParams> domain_experts;
		Router router;
		DiffusionSchedule schedule;
		double guidance_scale = 1.0;
		TrainingMeta meta;

		/// Throws InvalidArgument on architecture mismatch or E < 1.
		void validate() const;
		/// Hash of the expert and router descriptions.
		std::uint64_t architecture_hash() const;

		friend bool operator==(const MoEParams&, const MoEParams&) = default;
	};

	/// One supervised example: truth map at h_t plus its conditioning.
	struct TrainItem
	{
		Map2D truth;
		CondStatic cond;
		nn::Mat router_input;
		EnvLabel env = EnvLabel::rural;
	};

	struct TrainConfig
	{
		int epochs = 10;
		int batch_size = 16;
		float lr = 1e-3f;
		int threads = 1;
	};

	/// DDPM training of one expert. With a domain, only items of that environment are used.
	/// loss_log receives one mean loss per epoch.
	ExpertParams train_expert(const std::vector<TrainItem> &items, const DenoiserArch &arch, const DiffusionSchedule &schedule,
			const TrainConfig &cfg, std::uint64_t seed, std::optional<EnvLabel> domain = std::nullopt,
			std::vector<double> *loss_log = nullptr);

	struct RouterItem
	{
		nn::Mat input;
		int label = 0;
	};

	/// Cross-entropy training of the router; needs at least two distinct labels.
	Router train_router(const std::vector<RouterItem> &items, const RouterArch &arch, const TrainConfig &cfg, int x_dim, int y_dim,
			std::uint64_t seed, std::vector<double> *loss_log = nullptr);

	struct RouteResult
	{
		nn::Vec weights;
		int top = 0;
	};

	/// Softmax weights over the domain experts; ties in the argmax go to the lower index.
	RouteResult route(const Router &router, const Map2D &building_slice, const TerrainMap &terrain);
	RouteResult route(const Router &router, const nn::Mat &router_input, int x_dim, int y_dim);

	/// eps_shared + (g + eta) * w_top * (eps_domain - eps_shared).
	Map2D cfg_fuse(const Map2D &eps_shared, const Map2D &eps_domain, double w_top, double g, double eta);

	/// Joint DDPM objective on the fused prediction over all experts; updates every network.
	MoEParams fine_tune(const MoEParams &moe, const std::vector<TrainItem> &items, const TrainConfig &cfg, std::uint64_t seed,
			std::vector<double> *loss_log = nullptr);

	/// Mean fused DDPM loss with (t, eps) drawn from the seed; used to compare parameter sets.
	double fused_loss(const MoEParams &moe, const std::vector<TrainItem> &items, std::uint64_t seed);

	struct SampleOptions
	{
		int steps = 10;
		bool clip_intermediate = true;
	};

	struct SampleTrace
	{
		double eta = 0.0;
		int expert = 0;
		double w_top = 0.0;
	};

	/// One candidate: shared + top-1 domain expert fused per step with eta ~ N(0, sigma_t) drawn once.
	Map2D ddim_sample(const MoEParams &moe, const CondStatic &cond, const nn::Mat &router_input, const SampleOptions &options,
			std::uint64_t seed, double sigma_t, SampleTrace *trace = nullptr);

	struct CandidateSet
	{
		std::vector<Map2D> candidates;
		std::vector<std::uint64_t> seeds;
		std::vector<double> sigma_trace;
		std::vector<double> etas;
	};

	/// M candidates with seeds mix_seed(seed, i); output does not depend on the thread count.
	CandidateSet generate_candidates(const MoEParams &moe, const CondStatic &cond, const nn::Mat &router_input,
			const SampleOptions &options, int m, std::uint64_t seed, double sigma_t, int threads = 1);
}
