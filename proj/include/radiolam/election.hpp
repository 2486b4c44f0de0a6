#pragma once

#include <radiolam/augment.hpp>
#include <radiolam/moe.hpp>

#include <string>
#include <vector>

namespace radiolam::election
{
	/// Guidance-noise controller state.
	struct NoiseCtlState
	{
		double sigma_t = 0.05;
		double delta_sigma = 0.05;
		double sigma_max = 0.3;
		double var_threshold = 1.0;

		void validate() const;
		friend bool operator==(const NoiseCtlState&, const NoiseCtlState&) = default;
	};

	struct ElectionReport
	{
		std::vector<double> distances;
		std::size_t winner_index = 0;
		double variance = 0.0;
		double updated_sigma = 0.0;
	};

	/// Sum over non-dropped entries of (candidate(x_s, y_s) - rss_hat)^2; dropped entries add 0.
	double election_distance(const Map2D &candidate, const augment::ProjectedSet &projected, const SampleSet &samples);

	/// Population variance.
	double population_variance(const std::vector<double> &values);

	/// sigma + delta capped at sigma_max when variance < V, halved otherwise (never reaching 0).
	NoiseCtlState update_noise(const NoiseCtlState &state, double variance);

	/// Arg-min of the distances, ties to the lowest index. updated_sigma is left at 0.
	ElectionReport select_best(const CandidateSet &candidates, const augment::ProjectedSet &projected, const SampleSet &samples,
			int threads = 1);

	struct RoundTrace
	{
		double sigma = 0.0;
		double variance = 0.0;
		double best_distance = 0.0;
		std::size_t winner_index = 0;
	};

	struct LoopResult
	{
		Map2D winner;
		/// Report of the round that produced the overall winner.
		ElectionReport report;
		std::size_t winner_round = 0;
		std::vector<RoundTrace> trace;
		NoiseCtlState final_state;
	};

	/// Each round generates M candidates at the current sigma, elects, and updates the controller.
	/// Round r uses the master seed mix_seed(seed, r); the overall winner is the best across rounds.
	LoopResult run_election_loop(const MoEParams &moe, const CondStatic &cond, const nn::Mat &router_input,
			const augment::ProjectedSet &projected, const SampleSet &samples, const SampleOptions &options, int m, int rounds,
			const NoiseCtlState &init, std::uint64_t seed, int threads = 1);

	/// JSON with distances, winner, variance and the sigma trace.
	std::string report_json(const LoopResult &result);
}
