#include <radiolam/election.hpp>

#include <json.hpp>

#include <algorithm>
#include <limits>

namespace radiolam::election
{
	void NoiseCtlState::validate() const
	{
		if (!(sigma_t > 0.0 && sigma_t <= sigma_max))
			throw InvalidArgument("noise controller: sigma must lie in (0, sigma_max]");
		if (!(delta_sigma > 0.0))
			throw InvalidArgument("noise controller: delta_sigma must be positive");
		if (!(var_threshold > 0.0))
			throw InvalidArgument("noise controller: variance threshold must be positive");
	}

	double election_distance(const Map2D &candidate, const augment::ProjectedSet &projected, const SampleSet &samples)
	{
		if (projected.entries.size() != samples.size())
			throw InvalidArgument("projected set does not cover the sample set");
		double sum = 0.0;
		for (const augment::ProjectedSample &e : projected.entries)
		{
			if (e.x < 0 || e.y < 0 || e.x >= candidate.x_dim || e.y >= candidate.y_dim)
				throw InvalidArgument("projected sample outside the candidate map");
			if (e.dropped)
				continue;
			const double diff = double(candidate.at(e.x, e.y)) - double(e.rss_hat);
			sum += diff * diff;
		}
		return sum;
	}

	double population_variance(const std::vector<double> &values)
	{
		if (values.empty())
			return 0.0;
		double mean = 0.0;
		for (double v : values)
			mean += v;
		mean /= static_cast<double>(values.size());
		double var = 0.0;
		for (double v : values)
			var += (v - mean) * (v - mean);
		return var / static_cast<double>(values.size());
	}

	NoiseCtlState update_noise(const NoiseCtlState &state, double variance)
	{
		state.validate();
		NoiseCtlState next = state;
		if (variance < state.var_threshold)
			next.sigma_t = std::min(state.sigma_t + state.delta_sigma, state.sigma_max);
		else
			next.sigma_t = std::max(state.sigma_t / 2.0, std::numeric_limits<double>::min());
		return next;
	}

	ElectionReport select_best(const CandidateSet &candidates, const augment::ProjectedSet &projected, const SampleSet &samples,
			int threads)
	{
		if (candidates.candidates.empty())
			throw InvalidArgument("election needs at least one candidate");
		ElectionReport report;
		report.distances.resize(candidates.candidates.size());
		parallel_for(candidates.candidates.size(), threads, [&](std::size_t i)
		{
			report.distances[i] = election_distance(candidates.candidates[i], projected, samples);
		});
		for (std::size_t i = 1; i < report.distances.size(); i++)
			if (report.distances[i] < report.distances[report.winner_index])
				report.winner_index = i;
		report.variance = population_variance(report.distances);
		return report;
	}

	LoopResult run_election_loop(const MoEParams &moe, const CondStatic &cond, const nn::Mat &router_input,
			const augment::ProjectedSet &projected, const SampleSet &samples, const SampleOptions &options, int m, int rounds,
			const NoiseCtlState &init, std::uint64_t seed, int threads)
	{
		if (rounds < 1)
			throw InvalidArgument("election loop needs at least one round");
		init.validate();
		LoopResult result;
		NoiseCtlState state = init;
		double best = std::numeric_limits<double>::infinity();
		for (int r = 0; r < rounds; r++)
		{
			const std::uint64_t round_seed = r == 0 ? seed : mix_seed(seed, static_cast<std::uint64_t>(r));
			const CandidateSet set = generate_candidates(moe, cond, router_input, options, m, round_seed, state.sigma_t, threads);
			ElectionReport report = select_best(set, projected, samples, threads);
			const NoiseCtlState next = update_noise(state, report.variance);
			report.updated_sigma = next.sigma_t;
			const double d = report.distances[report.winner_index];
			if (d < best)
			{
				best = d;
				result.winner = set.candidates[report.winner_index];
				result.report = report;
				result.winner_round = static_cast<std::size_t>(r);
			}
			result.trace.push_back(RoundTrace { state.sigma_t, report.variance, best, report.winner_index });
			state = next;
		}
		result.final_state = state;
		return result;
	}

	std::string report_json(const LoopResult &result)
	{
		nlohmann::json j;
		j["distances"] = result.report.distances;
		j["winner_index"] = result.report.winner_index;
		j["winner_round"] = result.winner_round;
		j["variance"] = result.report.variance;
		j["updated_sigma"] = result.report.updated_sigma;
		nlohmann::json trace = nlohmann::json::array();
		for (const RoundTrace &t : result.trace)
			trace.push_back({ { "sigma", t.sigma }, { "variance", t.variance }, { "best_distance", t.best_distance }, { "winner_index",
					t.winner_index } });
		j["sigma_trace"] = trace;
		return j.dump(2);
	}
}
