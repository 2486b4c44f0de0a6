#include <radiolam/pipeline.hpp>
#include <radiolam/baselines.hpp>
#include <radiolam/io.hpp>
#include <radiolam/metrics.hpp>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <sstream>

namespace radiolam
{
	namespace fs = std::filesystem;

	PipelineOptions pipeline_options(const RunConfig &cfg, const MoEParams &moe)
	{
		PipelineOptions o;
		o.candidates = cfg.generation.candidates;
		o.rounds = cfg.election.rounds;
		o.sample = SampleOptions { cfg.generation.ddim_steps, cfg.generation.clip_intermediate };
		o.noise = cfg.election.noise;
		if (!cfg.election.fixed_threshold)
			o.noise.var_threshold = moe.meta.var_threshold;
		o.augment = cfg.augment;
		o.threads = cfg.threads;
		return o;
	}

	augment::ProjectedSet project_samples(const SampleSet &samples, const augment::SceneContext &ctx, int h_t,
			const augment::AugmentParams &params, bool use_augment)
	{
		if (h_t < 0 || h_t >= ctx.grid.h_dim)
			throw InvalidArgument("target height index out of range");
		if (!use_augment || samples.empty())
			return augment::coplanar_only(samples, h_t);
		return augment::augment(samples, ctx, h_t, params);
	}

	PipelineResult estimate_map(const MoEParams &moe, const augment::SceneContext &ctx, const BuildingMask &buildings,
			const TerrainMap &terrain, const SampleSet &samples, int h_t, const PipelineOptions &options, std::uint64_t seed)
	{
		PipelineResult result;
		result.projected = project_samples(samples, ctx, h_t, options.augment, options.use_augment);
		const CondStatic cond = make_cond_static(result.projected, buildings, terrain, ctx.grid);
		const nn::Mat router_input = make_router_input(buildings, terrain);
		if (options.use_election)
		{
			result.loop = election::run_election_loop(moe, cond, router_input, result.projected, samples, options.sample,
					options.candidates, options.rounds, options.noise, seed, options.threads);
		}
		else
		{
			// candidate 0 only; its seed does not depend on how many candidates were requested
			options.noise.validate();
			const CandidateSet set = generate_candidates(moe, cond, router_input, options.sample, 1, seed, options.noise.sigma_t, 1);
			election::LoopResult &loop = result.loop;
			loop.winner = set.candidates[0];
			loop.report.distances = { election::election_distance(set.candidates[0], result.projected, samples) };
			loop.report.winner_index = 0;
			loop.report.variance = 0.0;
			loop.report.updated_sigma = options.noise.sigma_t;
			loop.trace.push_back(election::RoundTrace { options.noise.sigma_t, 0.0, loop.report.distances[0], 0 });
			loop.final_state = options.noise;
		}
		result.winner = result.loop.winner;
		return result;
	}

	PipelineResult estimate_map(const MoEParams &moe, const Scene &scene, const SampleSet &samples, int h_t,
			const PipelineOptions &options, std::uint64_t seed)
	{
		return estimate_map(moe, augment::context_of(scene), scene.buildings, scene.terrain, samples, h_t, options, seed);
	}

	std::vector<TrainItem> build_train_items(const std::vector<Scene> &scenes, int k, int draws_per_scene,
			const augment::AugmentParams &params, std::uint64_t seed, int threads)
	{
		if (scenes.empty())
			throw InsufficientData("no training scenes");
		if (draws_per_scene < 1)
			throw InvalidArgument("draws per scene must be positive");
		const std::size_t D = static_cast<std::size_t>(draws_per_scene);
		std::vector<std::vector<TrainItem>> per_draw(scenes.size() * D);
		parallel_for(per_draw.size(), threads, [&](std::size_t job)
		{
			const Scene &scene = scenes[job / D];
			const SampleSet samples = draw_samples(scene, static_cast<std::size_t>(k), mix_seed(seed, job));
			const augment::SceneContext ctx = augment::context_of(scene);
			const nn::Mat router_input = make_router_input(scene.buildings, scene.terrain);
			for (int h = 0; h < scene.grid.h_dim; h++)
			{
				TrainItem item;
				item.truth = scene.truth_maps[static_cast<std::size_t>(h)];
				item.cond = make_cond_static(project_samples(samples, ctx, h, params, true), scene.buildings, scene.terrain, scene.grid);
				item.router_input = router_input;
				item.env = scene.env_label;
				per_draw[job].push_back(std::move(item));
			}
		});
		std::vector<TrainItem> items;
		for (std::vector<TrainItem> &v : per_draw)
			for (TrainItem &it : v)
				items.push_back(std::move(it));
		return items;
	}

	std::vector<RouterItem> build_router_items(const std::vector<Scene> &scenes)
	{
		std::vector<RouterItem> items;
		for (const Scene &s : scenes)
			items.push_back(RouterItem { make_router_input(s.buildings, s.terrain), static_cast<int>(s.env_label) });
		return items;
	}

	MoEParams train_moe(const std::vector<Scene> &scenes, const RunConfig &cfg, TrainLogs *logs, const ProgressFn &progress)
	{
		cfg.validate();
		if (scenes.empty())
			throw InsufficientData("no training scenes");
		for (EnvLabel env : kAllEnvs)
			if (std::none_of(scenes.begin(), scenes.end(), [&](const Scene &s)
			{
				return s.env_label == env;
			}))
				throw InsufficientData("training data has no scene labeled " + std::string(to_string(env)));
		auto say = [&](const std::string &msg)
		{
			if (progress)
				progress(msg);
		};
		const GridSpec &grid = scenes.front().grid;
		const GenerationSection &gen = cfg.generation;
		auto with_threads = [&](TrainConfig t)
		{
			t.threads = cfg.threads;
			return t;
		};

		say("building training items");
		const std::vector<TrainItem> items = build_train_items(scenes, cfg.scene.samples_k, gen.draws_per_scene, cfg.augment,
				mix_seed(cfg.seed, 11), cfg.threads);

		MoEParams moe;
		moe.schedule = make_schedule(gen.t_max, gen.beta_1, gen.beta_T);
		moe.guidance_scale = gen.guidance_scale;
		moe.meta.seed = cfg.seed;
		moe.meta.expert_epochs = gen.shared.epochs;
		moe.meta.router_epochs = gen.router.epochs;

		TrainLogs local;
		TrainLogs &log = logs != nullptr ? *logs : local;
		say("training shared expert on " + std::to_string(items.size()) + " items");
		moe.shared = train_expert(items, gen.denoiser, moe.schedule, with_threads(gen.shared), mix_seed(cfg.seed, 20), std::nullopt,
				&log.shared);
		log.domain.assign(kEnvCount, {});
		for (EnvLabel env : kAllEnvs)
		{
			say("training " + std::string(to_string(env)) + " expert");
			const int e = static_cast<int>(env);
			moe.domain_experts.push_back(train_expert(items, gen.denoiser, moe.schedule, with_threads(gen.domain),
					mix_seed(cfg.seed, 21 + static_cast<std::uint64_t>(e)), env, &log.domain[static_cast<std::size_t>(e)]));
		}
		say("training router");
		moe.router = train_router(build_router_items(scenes), RouterArch { gen.router_hidden, kEnvCount }, with_threads(gen.router),
				grid.x_dim, grid.y_dim, mix_seed(cfg.seed, 30), &log.router);
		if (gen.finetune.epochs > 0)
		{
			say("fine-tuning all experts and the router");
			moe = fine_tune(moe, items, with_threads(gen.finetune), mix_seed(cfg.seed, 40), &log.finetune);
		}
		say("calibrating election variance threshold");
		moe.meta.var_threshold = calibrate_var_threshold(moe, scenes, cfg);
		return moe;
	}

	double calibrate_var_threshold(const MoEParams &moe, const std::vector<Scene> &scenes, const RunConfig &cfg)
	{
		if (cfg.election.fixed_threshold)
			return cfg.election.noise.var_threshold;
		const int n = std::max(1, cfg.election.calibration_items);
		PipelineOptions opt = pipeline_options(cfg, moe);
		opt.rounds = 1;
		opt.noise.var_threshold = 1.0;
		std::vector<double> variances;
		for (int i = 0; i < n; i++)
		{
			// spread the batch across scenes and heights
			const std::size_t s = (static_cast<std::size_t>(i) * 7919u) % scenes.size();
			const int h = i % scenes[s].grid.h_dim;
			const SampleSet samples = draw_samples(scenes[s], static_cast<std::size_t>(cfg.scene.samples_k),
					mix_seed(cfg.seed, 50'000 + static_cast<std::uint64_t>(i)));
			const PipelineResult r = estimate_map(moe, scenes[s], samples, h, opt, mix_seed(cfg.seed, 60'000 + static_cast<std::uint64_t>(i)));
			variances.push_back(r.loop.report.variance);
		}
		std::sort(variances.begin(), variances.end());
		const std::size_t mid = variances.size() / 2;
		double v = variances.size() % 2 == 1 ? variances[mid] : 0.5 * (variances[mid - 1] + variances[mid]);
		if (!(v > 0.0))
		{
			v = 1e-12;
			for (double x : variances)
				if (x > 0.0)
				{
					v = x;
					break;
				}
		}
		return v;
	}

	void write_dataset_index(const fs::path &dir, const std::vector<DatasetEntry> &entries)
	{
		nlohmann::json list = nlohmann::json::array();
		for (const DatasetEntry &e : entries)
			list.push_back({ { "id", e.id }, { "env", std::string(to_string(e.env)) }, { "split", e.split }, { "manifest",
					e.manifest.generic_string() }, { "samples", e.samples.generic_string() } });
		nlohmann::json j;
		j["format"] = "radiolam-dataset-v1";
		j["scenes"] = list;
		write_text_file(dir / "index.json", j.dump(2) + "\n");
	}

	std::vector<DatasetEntry> read_dataset_index(const fs::path &dir)
	{
		const fs::path path = dir / "index.json";
		if (!fs::exists(path))
			throw MissingFile("missing dataset index: " + path.string());
		std::vector<DatasetEntry> entries;
		try
		{
			const nlohmann::json j = nlohmann::json::parse(read_text_file(path));
			if (j.at("format").get<std::string>() != "radiolam-dataset-v1")
				throw FormatError("unsupported dataset index format");
			for (const nlohmann::json &s : j.at("scenes"))
			{
				DatasetEntry e;
				e.id = s.at("id").get<std::string>();
				e.env = env_from_string(s.at("env").get<std::string>());
				e.split = s.at("split").get<std::string>();
				e.manifest = s.at("manifest").get<std::string>();
				e.samples = s.at("samples").get<std::string>();
				entries.push_back(std::move(e));
			}
		} catch (const nlohmann::json::exception &e)
		{
			throw FormatError("malformed dataset index: " + std::string(e.what()));
		} catch (const InvalidArgument &e)
		{
			throw FormatError("malformed dataset index: " + std::string(e.what()));
		}
		return entries;
	}

	std::vector<DatasetEntry> generate_dataset(const RunConfig &cfg, const fs::path &dir, int threads)
	{
		cfg.validate();
		struct Job
		{
			std::string split;
			EnvLabel env;
			std::uint64_t seed;
			std::string id;
		};
		std::vector<Job> jobs;
		for (const char *split : { "train", "test" })
		{
			const int per_env = std::string(split) == "train" ? cfg.scene.train_per_env : cfg.scene.test_per_env;
			const std::uint64_t base = std::string(split) == "train" ? 1'000'000 : 2'000'000;
			int local = 0;
			for (EnvLabel env : kAllEnvs)
				for (int i = 0; i < per_env; i++)
				{
					std::ostringstream id;
					id << split << '_' << std::setw(4) << std::setfill('0') << local;
					jobs.push_back(Job { split, env, mix_seed(cfg.seed, base + static_cast<std::uint64_t>(local)), id.str() });
					local++;
				}
		}
		fs::create_directories(dir);
		std::vector<DatasetEntry> entries(jobs.size());
		parallel_for(jobs.size(), threads, [&](std::size_t i)
		{
			const Job &job = jobs[i];
			SceneGenConfig gen = cfg.scene.gen;
			gen.env_label = job.env;
			const Scene scene = generate_scene(gen, job.seed);
			DatasetEntry e;
			e.id = job.id;
			e.env = job.env;
			e.split = job.split;
			e.manifest = fs::path(job.id) / "manifest.json";
			save_scene(scene, dir / e.manifest);
			if (job.split == "test")
			{
				e.samples = fs::path(job.id) / "samples.csv";
				const SampleSet samples = draw_samples(scene, static_cast<std::size_t>(cfg.scene.samples_k), mix_seed(job.seed, 7));
				write_samples_csv(dir / e.samples, samples);
			}
			entries[i] = e;
		});
		write_dataset_index(dir, entries);
		return entries;
	}

	Map2D run_method(const std::string &method, const MoEParams *moe, const Scene &scene, const SampleSet &samples, int h_t,
			const RunConfig &cfg, std::uint64_t seed, int threads, std::vector<double> *sigma_trace)
	{
		if (method == "rbf")
			return baselines::rbf3d_estimate(samples, h_t);
		if (method == "kriging")
			return baselines::kriging3d_estimate(samples, h_t, baselines::fit_variogram(samples, cfg.baselines.variogram,
					cfg.baselines.bins));
		if (method.rfind("radiolam", 0) != 0 || std::find(kMethods.begin(), kMethods.end(), method) == kMethods.end())
			throw InvalidArgument("unknown method: " + method);
		if (moe == nullptr)
			throw InvalidArgument("method " + method + " needs a trained checkpoint");
		PipelineOptions opt = pipeline_options(cfg, *moe);
		opt.threads = threads;
		opt.use_augment = method.find("no-augment") == std::string::npos;
		opt.use_election = method.find("no-election") == std::string::npos;
		const PipelineResult r = estimate_map(*moe, scene, samples, h_t, opt, seed);
		if (sigma_trace != nullptr)
			for (const election::RoundTrace &t : r.loop.trace)
				sigma_trace->push_back(t.sigma);
		return r.winner;
	}

	std::vector<EvalRow> summarize(const std::vector<EvalRow> &rows)
	{
		struct Acc
		{
			double mae = 0, mse = 0, psnr = 0;
			int n = 0;
		};
		std::map<std::tuple<std::string, int, std::string>, Acc> groups;
		for (const EvalRow &r : rows)
		{
			for (const std::string &env : { r.env, std::string("all") })
			{
				Acc &a = groups[{ env, r.h_t, r.method }];
				a.mae += r.mae;
				a.mse += r.mse;
				a.psnr += r.psnr;
				a.n++;
			}
		}
		std::vector<EvalRow> out;
		for (const auto &[key, a] : groups)
		{
			const auto &[env, h, method] = key;
			out.push_back(EvalRow { "mean", env, h, method, a.mae / a.n, a.mse / a.n, a.psnr / a.n });
		}
		return out;
	}

	std::string eval_csv(const std::vector<EvalRow> &rows)
	{
		std::ostringstream os;
		os << "scene_id,env,h_t,method,mae,mse,psnr\n" << std::setprecision(10);
		for (const EvalRow &r : rows)
		{
			os << r.scene_id << ',' << r.env << ',' << r.h_t << ',' << r.method << ',' << r.mae << ',' << r.mse << ',';
			if (std::isinf(r.psnr))
				os << "inf";
			else
				os << r.psnr;
			os << '\n';
		}
		return os.str();
	}
}
