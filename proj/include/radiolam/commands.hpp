#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace radiolam::cli
{
	namespace fs = std::filesystem;

	// Each command throws on failure; the executable maps exceptions to a nonzero exit code.

	struct GenScenesArgs
	{
		fs::path config;
		fs::path out_dir;
		int threads = 1;
	};
	int cmd_gen_scenes(const GenScenesArgs &args, std::ostream &log);

	struct TrainArgs
	{
		fs::path config;
		fs::path data_dir;
		fs::path out_checkpoint;
		std::optional<int> threads;
	};
	int cmd_train(const TrainArgs &args, std::ostream &log);

	struct EstimateArgs
	{
		fs::path checkpoint;
		fs::path scene_manifest;
		fs::path samples_csv;
		int h_t = 0;
		fs::path out_map;
		std::optional<fs::path> out_pgm;
		std::optional<fs::path> report;
		std::optional<fs::path> config;
		int candidates = 16;
		bool no_augment = false;
		bool no_election = false;
		std::optional<std::uint64_t> seed;
		int threads = 1;
	};
	int cmd_estimate(const EstimateArgs &args, std::ostream &log);

	struct EvalArgs
	{
		fs::path data_dir;
		std::vector<std::string> methods;
		fs::path out_csv;
		std::optional<fs::path> checkpoint;
		std::optional<fs::path> config;
		std::optional<int> h_t;
		std::optional<std::uint64_t> seed;
		int threads = 1;
	};
	int cmd_eval(const EvalArgs &args, std::ostream &log);

	struct BaselineArgs
	{
		fs::path scene_manifest;
		fs::path samples_csv;
		int h_t = 0;
		std::string method;
		fs::path out_map;
		std::optional<fs::path> out_pgm;
	};
	int cmd_baseline(const BaselineArgs &args, std::ostream &log);

	struct RenderArgs
	{
		fs::path map_rmt;
		fs::path out_pgm;
	};
	int cmd_render(const RenderArgs &args, std::ostream &log);
}
