#include <radiolam/checkpoint.hpp>
#include <radiolam/diffusion.hpp>
#include <radiolam/io.hpp>
#include <radiolam/pipeline.hpp>

#include "support.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <map>
#include <sstream>

using namespace radiolam;
namespace fs = std::filesystem;

namespace
{
	const char *kTinyConfig = R"({
  "seed": 11,
  "threads": 1,
  "scene": { "x_dim": 16, "y_dim": 16, "train_per_env": 2, "test_per_env": 1, "samples_k": 12 },
  "generation": {
    "channels": 4, "time_dim": 8, "router_hidden": 4, "t_max": 20, "ddim_steps": 4, "candidates": 4,
    "draws_per_scene": 1,
    "shared": { "epochs": 2 }, "domain": { "epochs": 1 }, "router": { "epochs": 5 }, "finetune": { "epochs": 1 }
  },
  "election": { "calibration_items": 4 }
})";

	int run(const std::string &args)
	{
		const std::string cmd = std::string(RADIOLAM_CLI_PATH) + " " + args + " > /dev/null 2>&1";
		return std::system(cmd.c_str());
	}

	std::string bytes(const fs::path &p)
	{
		return read_text_file(p);
	}

	/// Dataset and checkpoint shared by every test in this file, built once.
	class CliFixture : public ::testing::Test
	{
		protected:
			static fs::path root;

			static void SetUpTestSuite()
			{
				root = test::scratch_dir("cli");
				write_text_file(root / "cfg.json", kTinyConfig);
				ASSERT_EQ(run("gen-scenes --config " + (root / "cfg.json").string() + " --out " + (root / "data").string()), 0);
				ASSERT_EQ(run("train --config " + (root / "cfg.json").string() + " --data " + (root / "data").string() + " --out "
						+ (root / "ckpt").string()), 0);
			}

			static fs::path cfg()
			{
				return root / "cfg.json";
			}
			static fs::path data()
			{
				return root / "data";
			}
			static fs::path ckpt()
			{
				return root / "ckpt";
			}
			static DatasetEntry first_test()
			{
				for (const DatasetEntry &e : read_dataset_index(data()))
					if (e.split == "test")
						return e;
				throw std::runtime_error("no test scene");
			}
			static std::string scene_args(const DatasetEntry &e)
			{
				return " --scene " + (data() / e.manifest).string() + " --samples " + (data() / e.samples).string();
			}
	};

	fs::path CliFixture::root;

	std::vector<std::vector<std::string>> csv_rows(const std::string &text)
	{
		std::vector<std::vector<std::string>> rows;
		std::istringstream in(text);
		std::string line;
		while (std::getline(in, line))
		{
			std::vector<std::string> cells;
			std::istringstream ls(line);
			std::string cell;
			while (std::getline(ls, cell, ','))
				cells.push_back(cell);
			rows.push_back(cells);
		}
		return rows;
	}
}

TEST_F(CliFixture, GenScenesIsDeterministic)
{
	const fs::path again = root / "data_again";
	ASSERT_EQ(run("gen-scenes --config " + cfg().string() + " --out " + again.string()), 0);
	const std::vector<DatasetEntry> a = read_dataset_index(data());
	const std::vector<DatasetEntry> b = read_dataset_index(again);
	ASSERT_EQ(a.size(), 12u);
	ASSERT_EQ(a.size(), b.size());
	EXPECT_EQ(bytes(data() / "index.json"), bytes(again / "index.json"));
	for (std::size_t i = 0; i < a.size(); i++)
	{
		const Scene sa = load_scene(data() / a[i].manifest);
		const Scene sb = load_scene(again / b[i].manifest);
		EXPECT_EQ(sa.transmitters.size(), sb.transmitters.size());
		for (std::size_t h = 0; h < sa.truth_maps.size(); h++)
			EXPECT_EQ(sa.truth_maps[h].data, sb.truth_maps[h].data);
		if (a[i].split == "test")
			EXPECT_EQ(bytes(data() / a[i].samples), bytes(again / b[i].samples));
	}
}

TEST_F(CliFixture, TrainWritesLoadableCheckpointAndLosses)
{
	const MoEParams moe = load_checkpoint(ckpt());
	EXPECT_EQ(moe.domain_experts.size(), 4u);
	EXPECT_EQ(moe.schedule.t_max, 20);
	EXPECT_EQ(moe.shared.net.arch().channels, 4);
	EXPECT_GT(moe.meta.var_threshold, 0.0);
	EXPECT_EQ(csv_rows(bytes(ckpt() / "loss_shared.csv")).size(), 3u);
	EXPECT_EQ(csv_rows(bytes(ckpt() / "loss_router.csv")).size(), 6u);
	for (const char *env : { "rural", "suburban", "urban", "dense_urban" })
		EXPECT_EQ(csv_rows(bytes(ckpt() / ("loss_" + std::string(env) + ".csv"))).size(), 2u) << env;

	const fs::path again = root / "ckpt_again";
	ASSERT_EQ(run("train --config " + cfg().string() + " --data " + data().string() + " --out " + again.string()), 0);
	EXPECT_EQ(load_checkpoint(again), moe);
	EXPECT_EQ(bytes(again / "checkpoint.json"), bytes(ckpt() / "checkpoint.json"));
}

TEST_F(CliFixture, EstimateWritesOutputs)
{
	const DatasetEntry e = first_test();
	const fs::path out = root / "est";
	fs::create_directories(out);
	ASSERT_EQ(run("estimate --checkpoint " + ckpt().string() + scene_args(e) + " --h-t 1 --out " + (out / "w.rmt").string()
			+ " --pgm " + (out / "w.pgm").string() + " --report " + (out / "r.json").string() + " --config " + cfg().string()), 0);
	const Map2D w = read_map(out / "w.rmt");
	EXPECT_EQ(w.x_dim, 16);
	EXPECT_EQ(w.y_dim, 16);
	for (float v : w.data)
	{
		EXPECT_GE(v, 0.0f);
		EXPECT_LE(v, 1.0f);
	}
	EXPECT_TRUE(fs::exists(out / "w.pgm"));
	EXPECT_NE(bytes(out / "r.json").find("winner"), std::string::npos);

	ASSERT_EQ(run("estimate --checkpoint " + ckpt().string() + scene_args(e) + " --h-t 1 --out " + (out / "w2.rmt").string()
			+ " --config " + cfg().string()), 0);
	EXPECT_EQ(bytes(out / "w.rmt"), bytes(out / "w2.rmt"));
}

TEST_F(CliFixture, SingleCandidateWithoutElectionIsPlainSampling)
{
	const DatasetEntry e = first_test();
	const fs::path out = root / "single.rmt";
	ASSERT_EQ(run("estimate --checkpoint " + ckpt().string() + scene_args(e) + " --h-t 2 --candidates 1 --no-election --seed 5"
			+ " --config " + cfg().string() + " --out " + out.string()), 0);

	const RunConfig cfg_loaded = load_run_config(cfg());
	RunConfig c = cfg_loaded;
	c.seed = 5;
	const MoEParams moe = load_checkpoint(ckpt());
	const Scene scene = load_scene_for_estimation(data() / e.manifest);
	const SampleSet samples = read_samples_csv(data() / e.samples, scene.grid);
	PipelineOptions opt = pipeline_options(c, moe);
	opt.candidates = 1;
	opt.use_election = false;
	const PipelineResult r = estimate_map(moe, scene, samples, 2, opt, c.seed);
	EXPECT_EQ(read_map(out).data, r.winner.data);

	// with several candidates and no election the first one is returned
	const fs::path four = root / "four.rmt";
	ASSERT_EQ(run("estimate --checkpoint " + ckpt().string() + scene_args(e) + " --h-t 2 --candidates 4 --no-election --seed 5"
			+ " --config " + cfg().string() + " --out " + four.string()), 0);
	EXPECT_EQ(read_map(four).data, r.winner.data);
}

TEST_F(CliFixture, EvalRowsAndMeans)
{
	const fs::path out = root / "eval.csv";
	ASSERT_EQ(run("eval --data " + data().string() + " --methods radiolam,rbf --checkpoint " + ckpt().string() + " --config "
			+ cfg().string() + " --out " + out.string()), 0);
	const auto rows = csv_rows(bytes(out));
	ASSERT_FALSE(rows.empty());
	const std::vector<std::string> &header = rows[0];
	ASSERT_GE(header.size(), 7u);
	EXPECT_EQ(header[0], "scene_id");

	std::size_t per_scene = 0;
	std::map<std::pair<std::string, std::string>, std::pair<double, int>> sums;
	std::map<std::pair<std::string, std::string>, double> means;
	for (std::size_t i = 1; i < rows.size(); i++)
	{
		const auto &r = rows[i];
		const std::string key_h = r[2];
		const std::string key_m = r[3];
		if (r[0] == "mean")
		{
			if (r[1] == "all")
				means[{ key_h, key_m }] = std::stod(r[5]);
			continue;
		}
		per_scene++;
		auto &s = sums[{ key_h, key_m }];
		s.first += std::stod(r[5]);
		s.second++;
	}
	// 4 test scenes, 3 heights, 2 methods
	EXPECT_EQ(per_scene, 24u);
	ASSERT_EQ(means.size(), 6u);
	for (const auto &[k, v] : means)
		EXPECT_NEAR(v, sums[k].first / sums[k].second, 1e-6 * (1.0 + v));
}

TEST_F(CliFixture, BaselineAndRender)
{
	const DatasetEntry e = first_test();
	const fs::path out = root / "rbf.rmt";
	ASSERT_EQ(run("baseline --method kriging" + scene_args(e) + " --h-t 0 --out " + out.string()), 0);
	const Map2D m = read_map(out);
	EXPECT_EQ(m.x_dim, 16);
	ASSERT_EQ(run("render " + out.string() + " " + (root / "rbf.pgm").string()), 0);
	const std::string pgm = bytes(root / "rbf.pgm");
	EXPECT_EQ(pgm.rfind("P5", 0), 0u);
}

TEST_F(CliFixture, ErrorsGiveNonzeroExit)
{
	const DatasetEntry e = first_test();
	EXPECT_NE(run("estimate --checkpoint " + (root / "missing").string() + scene_args(e) + " --h-t 0 --out /dev/null"), 0);
	EXPECT_NE(run("estimate --checkpoint " + ckpt().string() + scene_args(e) + " --h-t 3 --out " + (root / "x.rmt").string()), 0);
	EXPECT_NE(run("baseline --method rbf" + scene_args(e) + " --h-t -1 --out " + (root / "x.rmt").string()), 0);
	EXPECT_NE(run("baseline --method spline" + scene_args(e) + " --h-t 0 --out " + (root / "x.rmt").string()), 0);
	EXPECT_NE(run("render " + (root / "nothing.rmt").string() + " " + (root / "x.pgm").string()), 0);
	EXPECT_NE(run("eval --data " + data().string() + " --methods radiolam --out " + (root / "x.csv").string()), 0);
	EXPECT_NE(run("train --config " + (root / "nope.json").string() + " --data " + data().string() + " --out "
			+ (root / "x").string()), 0);
	EXPECT_NE(run(""), 0);
}
