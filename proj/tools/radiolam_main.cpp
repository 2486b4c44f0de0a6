#include <radiolam/commands.hpp>

#include <CLI11.hpp>

#include <exception>
#include <iostream>

using namespace radiolam::cli;

int main(int argc, char **argv)
{
	CLI::App app { "Radio map estimation at arbitrary heights from sparse samples" };
	app.require_subcommand(1);

	GenScenesArgs gen;
	CLI::App *gen_cmd = app.add_subcommand("gen-scenes", "Generate a synthetic dataset");
	gen_cmd->add_option("--config", gen.config, "JSON run config")->required();
	gen_cmd->add_option("--out", gen.out_dir, "Output dataset directory")->required();
	gen_cmd->add_option("--threads", gen.threads, "Worker threads")->check(CLI::PositiveNumber);

	TrainArgs train;
	CLI::App *train_cmd = app.add_subcommand("train", "Cold-start and fine-tune the mixture of experts");
	train_cmd->add_option("--config", train.config, "JSON run config")->required();
	train_cmd->add_option("--data", train.data_dir, "Dataset directory")->required();
	train_cmd->add_option("--out", train.out_checkpoint, "Checkpoint directory")->required();
	train_cmd->add_option("--threads", train.threads, "Worker threads (overrides the config)")->check(CLI::PositiveNumber);

	EstimateArgs est;
	CLI::App *est_cmd = app.add_subcommand("estimate", "Estimate the radio map of one target plane");
	est_cmd->add_option("--checkpoint", est.checkpoint, "Checkpoint directory")->required();
	est_cmd->add_option("--scene", est.scene_manifest, "Scene manifest")->required();
	est_cmd->add_option("--samples", est.samples_csv, "Samples CSV")->required();
	est_cmd->add_option("--h-t", est.h_t, "Target height index")->required();
	est_cmd->add_option("--out", est.out_map, "Winner map (RMT)")->required();
	est_cmd->add_option("--pgm", est.out_pgm, "Optional heatmap (PGM)");
	est_cmd->add_option("--report", est.report, "Optional election report (JSON)");
	est_cmd->add_option("--config", est.config, "JSON run config");
	est_cmd->add_option("--candidates", est.candidates, "Number of candidates M")->check(CLI::PositiveNumber);
	est_cmd->add_flag("--no-augment", est.no_augment, "Skip sample projection");
	est_cmd->add_flag("--no-election", est.no_election, "Return candidate 0");
	est_cmd->add_option("--seed", est.seed, "Seed (overrides config and RADIOLAM_SEED)");
	est_cmd->add_option("--threads", est.threads, "Worker threads")->check(CLI::PositiveNumber);

	EvalArgs eval;
	CLI::App *eval_cmd = app.add_subcommand("eval", "Score methods on the test split");
	eval_cmd->add_option("--data", eval.data_dir, "Dataset directory")->required();
	eval_cmd->add_option("--methods", eval.methods, "radiolam, radiolam-no-augment, radiolam-no-election, "
			"radiolam-no-augment-no-election, rbf, kriging")->required()->delimiter(',');
	eval_cmd->add_option("--out", eval.out_csv, "Metrics CSV")->required();
	eval_cmd->add_option("--checkpoint", eval.checkpoint, "Checkpoint directory (pipeline methods)");
	eval_cmd->add_option("--config", eval.config, "JSON run config");
	eval_cmd->add_option("--h-t", eval.h_t, "Only this height index");
	eval_cmd->add_option("--seed", eval.seed, "Seed (overrides config and RADIOLAM_SEED)");
	eval_cmd->add_option("--threads", eval.threads, "Worker threads")->check(CLI::PositiveNumber);

	BaselineArgs base;
	CLI::App *base_cmd = app.add_subcommand("baseline", "3D interpolation baseline for one target plane");
	base_cmd->add_option("--method", base.method, "rbf or kriging")->required()->check(CLI::IsMember( { "rbf", "kriging" }));
	base_cmd->add_option("--scene", base.scene_manifest, "Scene manifest")->required();
	base_cmd->add_option("--samples", base.samples_csv, "Samples CSV")->required();
	base_cmd->add_option("--h-t", base.h_t, "Target height index")->required();
	base_cmd->add_option("--out", base.out_map, "Estimated map (RMT)")->required();
	base_cmd->add_option("--pgm", base.out_pgm, "Optional heatmap (PGM)");

	RenderArgs render;
	CLI::App *render_cmd = app.add_subcommand("render", "Render an RMT map as an 8-bit PGM");
	render_cmd->add_option("map", render.map_rmt, "Map (RMT)")->required();
	render_cmd->add_option("out", render.out_pgm, "Output PGM")->required();

	CLI11_PARSE(app, argc, argv);

	try
	{
		if (gen_cmd->parsed())
			return cmd_gen_scenes(gen, std::cout);
		if (train_cmd->parsed())
			return cmd_train(train, std::cout);
		if (est_cmd->parsed())
			return cmd_estimate(est, std::cout);
		if (eval_cmd->parsed())
			return cmd_eval(eval, std::cout);
		if (base_cmd->parsed())
			return cmd_baseline(base, std::cout);
		if (render_cmd->parsed())
			return cmd_render(render, std::cout);
	} catch (const std::exception &e)
	{
		std::cerr << "error: " << e.what() << '\n';
		return 1;
	}
	return 1;
}
