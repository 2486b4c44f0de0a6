#pragma once

#include <radiolam/moe.hpp>

#include <filesystem>

namespace radiolam
{
	/// Rebuilds alphas and alpha_bars from explicit betas (same arithmetic as make_schedule).
	DiffusionSchedule schedule_from_betas(const std::vector<double> &betas);

	/// Writes checkpoint.json plus one RMT file per network into dir. Each RMT holds the
	/// network's tensors flattened in registration order; the JSON lists names and shapes.
	void save_checkpoint(const MoEParams &moe, const std::filesystem::path &dir);

	/// Throws MissingFile, FormatError (bad header, architecture hash mismatch) or DimensionMismatch.
	MoEParams load_checkpoint(const std::filesystem::path &dir);
}
