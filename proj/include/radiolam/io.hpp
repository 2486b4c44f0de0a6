#pragma once

#include <radiolam/scene.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace radiolam
{
	/// Row-major float tensor as stored in an RMT file.
	struct Tensor
	{
		std::vector<std::uint32_t> dims;
		std::vector<float> values;

		std::size_t element_count() const noexcept;
		friend bool operator==(const Tensor&, const Tensor&) = default;
	};

	// RMT layout: "RMT1", u32 rank, rank × u32 dims, then row-major f32 values, all little-endian.
	void write_rmt(const std::filesystem::path &path, const Tensor &tensor);
	/// Throws MissingFile, FormatError (bad magic/header) or DimensionMismatch (payload size).
	Tensor read_rmt(const std::filesystem::path &path);

	Tensor to_tensor(const Map2D &map);
	Map2D map_from_tensor(const Tensor &tensor);

	void write_map(const std::filesystem::path &path, const Map2D &map);
	Map2D read_map(const std::filesystem::path &path);

	/// Writes manifest.json plus buildings.rmt, terrain.rmt and truth_h<i>.rmt next to it.
	void save_scene(const Scene &scene, const std::filesystem::path &manifest_path);
	Scene load_scene(const std::filesystem::path &manifest_path);

	/// Same as load_scene but never reads the hidden transmitter section.
	Scene load_scene_for_estimation(const std::filesystem::path &manifest_path);

	/// CSV with header x,y,h,rss.
	void write_samples_csv(const std::filesystem::path &path, const SampleSet &samples);
	SampleSet read_samples_csv(const std::filesystem::path &path, const GridSpec &grid);

	/// Binary 8-bit PGM (P5); pixel value = round(255 * clamp(value, 0, 1)). Rows follow x, columns y.
	void write_pgm(const std::filesystem::path &path, const Map2D &map);

	std::string read_text_file(const std::filesystem::path &path);
	void write_text_file(const std::filesystem::path &path, const std::string &text);
}
