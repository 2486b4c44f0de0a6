#include <radiolam/commands.hpp>
#include <radiolam/checkpoint.hpp>
#include <radiolam/io.hpp>
#include <radiolam/metrics.hpp>
#include <radiolam/pipeline.hpp>

#include <algorithm>
#include <iomanip>
#include <sstream>

namespace radiolam::cli
{
	namespace
	{
		RunConfig config_or_default(const std::optional<fs::path> &path)
		{
			if (path)
				return load_run_config(*path);
			RunConfig cfg;
			apply_env_overrides(cfg);
			return cfg;
		}

		void write_loss_csv(const fs::path &path, const std::vector<double> &losses)
		{
			std::ostringstream os;
			os << "epoch,loss\n" << std::setprecision(10);
			for (std::size_t i = 0; i < losses.size(); i++)
				os << i << ',' << losses[i] << '\n';
			write_text_file(path, os.str());
		}

		void check_height(const GridSpec &grid, int h_t)
		{
			if (h_t < 0 || h_t >= grid.h_dim)
				throw InvalidArgument("h_t " + std::to_string(h_t) + " is out of range [0, " + std::to_string(grid.h_dim) + ")");
		}
	}

	int cmd_gen_scenes(const GenScenesArgs &args, std::ostream &log)
	{
		const RunConfig cfg = load_run_config(args.config);
		const std::vector<DatasetEntry> entries = generate_dataset(cfg, args.out_dir, args.threads);
		log << "wrote " << entries.size() << " scenes to " << args.out_dir.string() << '\n';
		return 0;
	}

	int cmd_train(const TrainArgs &args, std::ostream &log)
	{
		RunConfig cfg = load_run_config(args.config);
		if (args.threads)
			cfg.threads = *args.threads;
		std::vector<Scene> scenes;
		for (const DatasetEntry &e : read_dataset_index(args.data_dir))
			if (e.split == "train")
				scenes.push_back(load_scene(args.data_dir / e.manifest));
		if (scenes.empty())
			throw InsufficientData("dataset has no training scenes");

		TrainLogs logs;
		const MoEParams moe = train_moe(scenes, cfg, &logs, [&](const std::string &msg)
		{
			log << msg << '\n' << std::flush;
		});
		save_checkpoint(moe, args.out_checkpoint);
		write_loss_csv(args.out_checkpoint / "loss_shared.csv", logs.shared);
		for (EnvLabel env : kAllEnvs)
			write_loss_csv(args.out_checkpoint / ("loss_" + std::string(to_string(env)) + ".csv"),
					logs.domain[static_cast<std::size_t>(env)]);
		write_loss_csv(args.out_checkpoint / "loss_router.csv", logs.router);
		write_loss_csv(args.out_checkpoint / "loss_finetune.csv", logs.finetune);
		log << "checkpoint written to " << args.out_checkpoint.string() << " (variance threshold " << moe.meta.var_threshold << ")\n";
		return 0;
	}

	int cmd_estimate(const EstimateArgs &args, std::ostream &log)
	{
		RunConfig cfg = config_or_default(args.config);
		if (args.seed)
			cfg.seed = *args.seed;
		const MoEParams moe = load_checkpoint(args.checkpoint);
		const Scene scene = load_scene_for_estimation(args.scene_manifest);
		check_height(scene.grid, args.h_t);
		const SampleSet samples = read_samples_csv(args.samples_csv, scene.grid);

		PipelineOptions opt = pipeline_options(cfg, moe);
		opt.candidates = args.candidates;
		opt.use_augment = !args.no_augment;
		opt.use_election = !args.no_election;
		opt.threads = args.threads;
		const PipelineResult r = estimate_map(moe, scene, samples, args.h_t, opt, cfg.seed);

		write_map(args.out_map, r.winner);
		if (args.out_pgm)
			write_pgm(*args.out_pgm, r.winner);
		if (args.report)
			write_text_file(*args.report, election::report_json(r.loop) + "\n");
		log << "winner " << r.loop.report.winner_index << " of " << (opt.use_election ? opt.candidates : 1) << ", D_ele "
				<< r.loop.report.distances[r.loop.report.winner_index] << '\n';
		return 0;
	}

	int cmd_eval(const EvalArgs &args, std::ostream &log)
	{
		RunConfig cfg = config_or_default(args.config);
		if (args.seed)
			cfg.seed = *args.seed;
		if (args.methods.empty())
			throw InvalidArgument("eval needs at least one method");
		std::optional<MoEParams> moe;
		for (const std::string &m : args.methods)
		{
			if (std::find(kMethods.begin(), kMethods.end(), m) == kMethods.end())
				throw InvalidArgument("unknown method: " + m);
			if (m.rfind("radiolam", 0) == 0 && !moe)
			{
				if (!args.checkpoint)
					throw InvalidArgument("method " + m + " needs --checkpoint");
				moe = load_checkpoint(*args.checkpoint);
			}
		}

		std::vector<EvalRow> rows;
		std::size_t scene_index = 0;
		for (const DatasetEntry &e : read_dataset_index(args.data_dir))
		{
			if (e.split != "test")
				continue;
			const Scene truth = load_scene(args.data_dir / e.manifest);
			const Scene scene = load_scene_for_estimation(args.data_dir / e.manifest);
			const SampleSet samples = read_samples_csv(args.data_dir / e.samples, scene.grid);
			for (int h = 0; h < scene.grid.h_dim; h++)
			{
				if (args.h_t && *args.h_t != h)
					continue;
				const Map2D &t = truth.truth_maps[static_cast<std::size_t>(h)];
				const std::uint64_t seed = mix_seed(cfg.seed, scene_index * 64 + static_cast<std::size_t>(h));
				for (const std::string &m : args.methods)
				{
					const Map2D est = run_method(m, moe ? &*moe : nullptr, scene, samples, h, cfg, seed, args.threads);
					rows.push_back(EvalRow { e.id, std::string(to_string(e.env)), h, m, metrics::mae(t, est), metrics::mse(t, est),
							metrics::psnr(t, est) });
				}
			}
			scene_index++;
		}
		if (args.h_t && rows.empty())
			throw InvalidArgument("h_t out of range");
		std::vector<EvalRow> all = rows;
		for (const EvalRow &r : summarize(rows))
			all.push_back(r);
		write_text_file(args.out_csv, eval_csv(all));
		log << "evaluated " << rows.size() << " (scene, height, method) triples\n";
		return 0;
	}

	int cmd_baseline(const BaselineArgs &args, std::ostream &log)
	{
		if (args.method != "rbf" && args.method != "kriging")
			throw InvalidArgument("baseline method must be rbf or kriging");
		const Scene scene = load_scene_for_estimation(args.scene_manifest);
		check_height(scene.grid, args.h_t);
		const SampleSet samples = read_samples_csv(args.samples_csv, scene.grid);
		const Map2D est = run_method(args.method, nullptr, scene, samples, args.h_t, RunConfig {}, 0, 1);
		write_map(args.out_map, est);
		if (args.out_pgm)
			write_pgm(*args.out_pgm, est);
		log << args.method << " estimate written to " << args.out_map.string() << '\n';
		return 0;
	}

	int cmd_render(const RenderArgs &args, std::ostream &log)
	{
		const Map2D map = read_map(args.map_rmt);
		write_pgm(args.out_pgm, map);
		log << "rendered " << map.x_dim << "x" << map.y_dim << " map to " << args.out_pgm.string() << '\n';
		return 0;
	}
}
