#include <radiolam/config.hpp>
#include <radiolam/io.hpp>

#include <json.hpp>

#include <cstdlib>

namespace radiolam
{
	using nlohmann::json;

	namespace
	{
		template<typename T>
		void read(const json &j, const char *key, T &target)
		{
			if (j.contains(key))
				target = j.at(key).get<T>();
		}

		void read_train(const json &j, const char *key, TrainConfig &t)
		{
			if (!j.contains(key))
				return;
			const json &s = j.at(key);
			read(s, "epochs", t.epochs);
			read(s, "batch_size", t.batch_size);
			read(s, "lr", t.lr);
		}

		json train_json(const TrainConfig &t)
		{
			return json { { "epochs", t.epochs }, { "batch_size", t.batch_size }, { "lr", t.lr } };
		}

		baselines::VariogramKind variogram_from_string(const std::string &s)
		{
			if (s == "exponential")
				return baselines::VariogramKind::exponential;
			if (s == "spherical")
				return baselines::VariogramKind::spherical;
			throw InvalidArgument("unknown variogram kind: " + s);
		}
	}

	void RunConfig::validate() const
	{
		scene.gen.grid.validate();
		if (scene.train_per_env < 0 || scene.test_per_env < 0 || scene.samples_k < 0)
			throw InvalidArgument("scene counts must be non-negative");
		if (scene.gen.tx_min < 1 || scene.gen.tx_max < scene.gen.tx_min)
			throw InvalidArgument("transmitter count range is invalid");
		augment.validate();
		generation.denoiser.validate();
		if (generation.ddim_steps < 1 || generation.ddim_steps > generation.t_max)
			throw InvalidArgument("DDIM steps must lie in [1, T]");
		if (generation.candidates < 1 || generation.draws_per_scene < 1 || generation.router_hidden < 1)
			throw InvalidArgument("generation counts must be positive");
		if (threads < 1)
			throw InvalidArgument("thread count must be positive");
		election.noise.validate();
		if (election.rounds < 1)
			throw InvalidArgument("election needs at least one round");
		if (baselines.bins < 1)
			throw InvalidArgument("variogram needs at least one bin");
	}

	RunConfig parse_run_config(const std::string &json_text)
	{
		RunConfig cfg;
		try
		{
			const json j = json::parse(json_text);
			read(j, "seed", cfg.seed);
			read(j, "threads", cfg.threads);
			if (j.contains("scene"))
			{
				const json &s = j.at("scene");
				SceneGenConfig &g = cfg.scene.gen;
				read(s, "x_dim", g.grid.x_dim);
				read(s, "y_dim", g.grid.y_dim);
				read(s, "h_dim", g.grid.h_dim);
				read(s, "cell_size_m", g.grid.cell_size_m);
				read(s, "heights_m", g.grid.heights_m);
				read(s, "tx_min", g.tx_min);
				read(s, "tx_max", g.tx_max);
				read(s, "freq_mhz", g.freq_mhz);
				read(s, "tx_power_min_dbm", g.tx_power_min_dbm);
				read(s, "tx_power_max_dbm", g.tx_power_max_dbm);
				read(s, "mast_min_m", g.mast_min_m);
				read(s, "mast_max_m", g.mast_max_m);
				if (s.contains("terrain_relief_m"))
					g.terrain_relief_m = s.at("terrain_relief_m").get<double>();
				read(s, "path_loss_n", g.propagation.path_loss_n);
				read(s, "wall_loss_db", g.propagation.wall_loss_db);
				read(s, "terrain_block_db", g.propagation.terrain_block_db);
				read(s, "lo_dbm", g.bounds.lo_dbm);
				read(s, "hi_dbm", g.bounds.hi_dbm);
				read(s, "train_per_env", cfg.scene.train_per_env);
				read(s, "test_per_env", cfg.scene.test_per_env);
				read(s, "samples_k", cfg.scene.samples_k);
			}
			if (j.contains("augment"))
			{
				const json &a = j.at("augment");
				augment::AugmentParams &p = cfg.augment;
				read(a, "u_scale_m", p.u_scale_m);
				read(a, "theta", p.theta);
				read(a, "path_loss_n", p.path_loss_n);
				read(a, "max_transmitters", p.max_transmitters);
				read(a, "lm_max_iters", p.lm_max_iters);
				read(a, "lm_tol", p.lm_tol);
				read(a, "hata_enabled", p.hata_enabled);
				read(a, "free_space_enabled", p.free_space_enabled);
			}
			if (j.contains("generation"))
			{
				const json &g = j.at("generation");
				GenerationSection &p = cfg.generation;
				read(g, "channels", p.denoiser.channels);
				read(g, "time_dim", p.denoiser.time_dim);
				read(g, "dilation1", p.denoiser.dilation1);
				read(g, "dilation2", p.denoiser.dilation2);
				read(g, "router_hidden", p.router_hidden);
				read(g, "t_max", p.t_max);
				read(g, "beta_1", p.beta_1);
				read(g, "beta_T", p.beta_T);
				read(g, "ddim_steps", p.ddim_steps);
				read(g, "clip_intermediate", p.clip_intermediate);
				read(g, "guidance_scale", p.guidance_scale);
				read(g, "draws_per_scene", p.draws_per_scene);
				read(g, "candidates", p.candidates);
				read_train(g, "shared", p.shared);
				read_train(g, "domain", p.domain);
				read_train(g, "router", p.router);
				read_train(g, "finetune", p.finetune);
			}
			if (j.contains("election"))
			{
				const json &e = j.at("election");
				read(e, "sigma_0", cfg.election.noise.sigma_t);
				read(e, "delta_sigma", cfg.election.noise.delta_sigma);
				read(e, "sigma_max", cfg.election.noise.sigma_max);
				if (e.contains("var_threshold"))
				{
					cfg.election.noise.var_threshold = e.at("var_threshold").get<double>();
					cfg.election.fixed_threshold = true;
				}
				read(e, "rounds", cfg.election.rounds);
				read(e, "calibration_items", cfg.election.calibration_items);
			}
			if (j.contains("baselines"))
			{
				const json &b = j.at("baselines");
				if (b.contains("variogram"))
					cfg.baselines.variogram = variogram_from_string(b.at("variogram").get<std::string>());
				read(b, "bins", cfg.baselines.bins);
			}
			cfg.validate();
		} catch (const json::exception &e)
		{
			throw FormatError(std::string("run config: ") + e.what());
		} catch (const InvalidArgument &e)
		{
			throw FormatError(std::string("run config: ") + e.what());
		}
		return cfg;
	}

	void apply_env_overrides(RunConfig &cfg)
	{
		if (const char *env = std::getenv("RADIOLAM_SEED"); env != nullptr && *env != '\0')
		{
			try
			{
				std::size_t used = 0;
				cfg.seed = std::stoull(env, &used);
				if (used != std::string(env).size())
					throw std::invalid_argument("trailing characters");
			} catch (const std::exception&)
			{
				throw FormatError(std::string("RADIOLAM_SEED is not an unsigned integer: ") + env);
			}
		}
	}

	RunConfig load_run_config(const std::filesystem::path &path)
	{
		if (!std::filesystem::exists(path))
			throw MissingFile("missing run config: " + path.string());
		RunConfig cfg = parse_run_config(read_text_file(path));
		apply_env_overrides(cfg);
		return cfg;
	}

	std::string to_json(const RunConfig &cfg)
	{
		const SceneGenConfig &g = cfg.scene.gen;
		json j;
		j["seed"] = cfg.seed;
		j["threads"] = cfg.threads;
		j["scene"] = json { { "x_dim", g.grid.x_dim }, { "y_dim", g.grid.y_dim }, { "h_dim", g.grid.h_dim }, { "cell_size_m",
				g.grid.cell_size_m }, { "heights_m", g.grid.heights_m }, { "tx_min", g.tx_min }, { "tx_max", g.tx_max }, { "freq_mhz",
				g.freq_mhz }, { "tx_power_min_dbm", g.tx_power_min_dbm }, { "tx_power_max_dbm", g.tx_power_max_dbm }, { "mast_min_m",
				g.mast_min_m }, { "mast_max_m", g.mast_max_m }, { "path_loss_n", g.propagation.path_loss_n }, { "wall_loss_db",
				g.propagation.wall_loss_db }, { "terrain_block_db", g.propagation.terrain_block_db }, { "lo_dbm", g.bounds.lo_dbm }, {
				"hi_dbm", g.bounds.hi_dbm }, { "train_per_env", cfg.scene.train_per_env }, { "test_per_env", cfg.scene.test_per_env }, {
				"samples_k", cfg.scene.samples_k } };
		if (g.terrain_relief_m)
			j["scene"]["terrain_relief_m"] = *g.terrain_relief_m;
		const augment::AugmentParams &a = cfg.augment;
		j["augment"] = json { { "u_scale_m", a.u_scale_m }, { "theta", a.theta }, { "path_loss_n", a.path_loss_n }, { "max_transmitters",
				a.max_transmitters }, { "lm_max_iters", a.lm_max_iters }, { "lm_tol", a.lm_tol }, { "hata_enabled", a.hata_enabled }, {
				"free_space_enabled", a.free_space_enabled } };
		const GenerationSection &p = cfg.generation;
		j["generation"] = json { { "channels", p.denoiser.channels }, { "time_dim", p.denoiser.time_dim }, { "dilation1",
				p.denoiser.dilation1 }, { "dilation2", p.denoiser.dilation2 }, { "router_hidden", p.router_hidden }, { "t_max", p.t_max }, {
				"beta_1", p.beta_1 }, { "beta_T", p.beta_T }, { "ddim_steps", p.ddim_steps }, { "clip_intermediate", p.clip_intermediate }, {
				"guidance_scale", p.guidance_scale }, { "draws_per_scene", p.draws_per_scene }, { "candidates", p.candidates }, { "shared",
				train_json(p.shared) }, { "domain", train_json(p.domain) }, { "router", train_json(p.router) }, { "finetune", train_json(
				p.finetune) } };
		j["election"] = json { { "sigma_0", cfg.election.noise.sigma_t }, { "delta_sigma", cfg.election.noise.delta_sigma }, { "sigma_max",
				cfg.election.noise.sigma_max }, { "rounds", cfg.election.rounds }, { "calibration_items", cfg.election.calibration_items } };
		if (cfg.election.fixed_threshold)
			j["election"]["var_threshold"] = cfg.election.noise.var_threshold;
		j["baselines"] = json { { "variogram", cfg.baselines.variogram == baselines::VariogramKind::exponential ? "exponential"
				: "spherical" }, { "bins", cfg.baselines.bins } };
		return j.dump(2);
	}
}
