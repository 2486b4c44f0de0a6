#include <radiolam/io.hpp>

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace radiolam
{
	namespace fs = std::filesystem;
	using nlohmann::json;

	namespace
	{
		static_assert(std::endian::native == std::endian::little, "RMT I/O assumes a little-endian host");

		void put_u32(std::ostream &out, std::uint32_t v)
		{
			out.write(reinterpret_cast<const char*>(&v), sizeof(v));
		}

		bool get_u32(std::istream &in, std::uint32_t &v)
		{
			return static_cast<bool>(in.read(reinterpret_cast<char*>(&v), sizeof(v)));
		}

		fs::path sibling(const fs::path &manifest, const std::string &name)
		{
			return manifest.parent_path() / name;
		}

		json grid_to_json(const GridSpec &g)
		{
			return json { { "x_dim", g.x_dim }, { "y_dim", g.y_dim }, { "h_dim", g.h_dim }, { "cell_size_m", g.cell_size_m }, {
					"heights_m", g.heights_m } };
		}

		GridSpec grid_from_json(const json &j)
		{
			GridSpec g;
			g.x_dim = j.at("x_dim").get<int>();
			g.y_dim = j.at("y_dim").get<int>();
			g.h_dim = j.at("h_dim").get<int>();
			g.cell_size_m = j.at("cell_size_m").get<double>();
			g.heights_m = j.at("heights_m").get<std::vector<double>>();
			return g;
		}

		Scene load_scene_impl(const fs::path &manifest_path, bool read_transmitters)
		{
			if (!fs::exists(manifest_path))
				throw MissingFile("missing manifest: " + manifest_path.string());
			json j;
			try
			{
				j = json::parse(read_text_file(manifest_path));
			} catch (const json::exception &e)
			{
				throw FormatError("malformed manifest " + manifest_path.string() + ": " + e.what());
			}

			Scene scene;
			try
			{
				if (j.at("format").get<std::string>() != "radiolam-scene-v1")
					throw FormatError("unsupported manifest format in " + manifest_path.string());
				scene.grid = grid_from_json(j.at("grid"));
				scene.grid.validate();
				scene.env_label = env_from_string(j.at("env_label").get<std::string>());
				scene.freq_mhz = j.at("freq_mhz").get<double>();
				scene.bounds.lo_dbm = j.at("normalization").at("lo_dbm").get<double>();
				scene.bounds.hi_dbm = j.at("normalization").at("hi_dbm").get<double>();
			} catch (const json::exception &e)
			{
				throw FormatError("manifest field error in " + manifest_path.string() + ": " + e.what());
			} catch (const InvalidArgument &e)
			{
				throw FormatError(e.what());
			}
			const GridSpec &g = scene.grid;
			const json &files = j.at("files");

			const Tensor b = read_rmt(sibling(manifest_path, files.at("buildings").get<std::string>()));
			if (b.dims != std::vector<std::uint32_t> { static_cast<std::uint32_t>(g.x_dim), static_cast<std::uint32_t>(g.y_dim),
					static_cast<std::uint32_t>(g.h_dim) })
				throw DimensionMismatch("building tensor dims disagree with manifest grid");
			scene.buildings = BuildingMask(g.x_dim, g.y_dim, g.h_dim);
			std::size_t i = 0;
			for (int x = 0; x < g.x_dim; x++)
				for (int y = 0; y < g.y_dim; y++)
					for (int h = 0; h < g.h_dim; h++)
						scene.buildings.set(x, y, h, b.values[i++] != 0.0f);

			const Tensor t = read_rmt(sibling(manifest_path, files.at("terrain").get<std::string>()));
			if (t.dims != std::vector<std::uint32_t> { static_cast<std::uint32_t>(g.x_dim), static_cast<std::uint32_t>(g.y_dim) })
				throw DimensionMismatch("terrain tensor dims disagree with manifest grid");
			scene.terrain.elevation = map_from_tensor(t);

			const auto truth_files = files.at("truth").get<std::vector<std::string>>();
			if (truth_files.size() != static_cast<std::size_t>(g.h_dim))
				throw DimensionMismatch("manifest lists a truth file count different from h_dim");
			for (const std::string &name : truth_files)
			{
				const Tensor m = read_rmt(sibling(manifest_path, name));
				if (m.dims != std::vector<std::uint32_t> { static_cast<std::uint32_t>(g.x_dim), static_cast<std::uint32_t>(g.y_dim) })
					throw DimensionMismatch("truth tensor dims disagree with manifest grid");
				scene.truth_maps.push_back(map_from_tensor(m));
			}

			if (read_transmitters)
			{
				const json &section = j.at("transmitters");
				for (const json &tj : section.at("list"))
				{
					Transmitter tx;
					const auto pos = tj.at("pos").get<std::vector<double>>();
					if (pos.size() != 3)
						throw FormatError("transmitter position must have 3 components");
					tx.pos = Vec3 { pos[0], pos[1], pos[2] };
					tx.power_dbm = tj.at("power_dbm").get<double>();
					tx.gain_const = tj.at("gain_const").get<double>();
					scene.transmitters.push_back(tx);
				}
			}
			return scene;
		}
	}

	std::size_t Tensor::element_count() const noexcept
	{
		std::size_t n = 1;
		for (std::uint32_t d : dims)
			n *= d;
		return n;
	}

	void write_rmt(const fs::path &path, const Tensor &tensor)
	{
		if (tensor.values.size() != tensor.element_count())
			throw InvalidArgument("tensor value count does not match its dims");
		std::ofstream out(path, std::ios::binary | std::ios::trunc);
		if (!out)
			throw IoError("cannot open for writing: " + path.string());
		out.write("RMT1", 4);
		put_u32(out, static_cast<std::uint32_t>(tensor.dims.size()));
		for (std::uint32_t d : tensor.dims)
			put_u32(out, d);
		out.write(reinterpret_cast<const char*>(tensor.values.data()), static_cast<std::streamsize>(tensor.values.size() * sizeof(float)));
		if (!out)
			throw IoError("write failed: " + path.string());
	}

	Tensor read_rmt(const fs::path &path)
	{
		std::ifstream in(path, std::ios::binary);
		if (!in)
			throw MissingFile("cannot open RMT file: " + path.string());
		char magic[4] = { };
		if (!in.read(magic, 4) || std::memcmp(magic, "RMT1", 4) != 0)
			throw FormatError("bad magic in " + path.string());
		std::uint32_t rank = 0;
		if (!get_u32(in, rank) || rank > 16)
			throw FormatError("bad rank in " + path.string());
		Tensor t;
		t.dims.resize(rank);
		for (auto &d : t.dims)
			if (!get_u32(in, d))
				throw FormatError("truncated header in " + path.string());

		const std::size_t expected = t.element_count();
		const auto header_end = in.tellg();
		in.seekg(0, std::ios::end);
		const auto payload = static_cast<std::size_t>(in.tellg() - header_end);
		if (payload != expected * sizeof(float))
			throw DimensionMismatch("payload of " + path.string() + " holds " + std::to_string(payload) + " bytes, dims require "
					+ std::to_string(expected * sizeof(float)));
		in.seekg(header_end);
		t.values.resize(expected);
		in.read(reinterpret_cast<char*>(t.values.data()), static_cast<std::streamsize>(expected * sizeof(float)));
		if (!in)
			throw IoError("read failed: " + path.string());
		return t;
	}

	Tensor to_tensor(const Map2D &map)
	{
		return Tensor { { static_cast<std::uint32_t>(map.x_dim), static_cast<std::uint32_t>(map.y_dim) }, map.data };
	}

	Map2D map_from_tensor(const Tensor &tensor)
	{
		if (tensor.dims.size() != 2)
			throw DimensionMismatch("expected a rank-2 tensor");
		Map2D map;
		map.x_dim = static_cast<int>(tensor.dims[0]);
		map.y_dim = static_cast<int>(tensor.dims[1]);
		map.data = tensor.values;
		return map;
	}

	void write_map(const fs::path &path, const Map2D &map)
	{
		write_rmt(path, to_tensor(map));
	}

	Map2D read_map(const fs::path &path)
	{
		return map_from_tensor(read_rmt(path));
	}

	void save_scene(const Scene &scene, const fs::path &manifest_path)
	{
		const GridSpec &g = scene.grid;
		if (!scene.buildings.matches(g) || scene.truth_maps.size() != static_cast<std::size_t>(g.h_dim))
			throw InvalidArgument("scene fields disagree with its grid");
		if (!manifest_path.parent_path().empty())
			fs::create_directories(manifest_path.parent_path());

		Tensor b { { static_cast<std::uint32_t>(g.x_dim), static_cast<std::uint32_t>(g.y_dim), static_cast<std::uint32_t>(g.h_dim) },
				{ } };
		b.values.reserve(g.volume_size());
		for (std::uint8_t v : scene.buildings.raw())
			b.values.push_back(v ? 1.0f : 0.0f);
		write_rmt(sibling(manifest_path, "buildings.rmt"), b);
		write_map(sibling(manifest_path, "terrain.rmt"), scene.terrain.elevation);

		std::vector<std::string> truth_files;
		for (int h = 0; h < g.h_dim; h++)
		{
			truth_files.push_back("truth_h" + std::to_string(h) + ".rmt");
			write_map(sibling(manifest_path, truth_files.back()), scene.truth_maps[h]);
		}

		json txs = json::array();
		for (const Transmitter &tx : scene.transmitters)
			txs.push_back(json { { "pos", { tx.pos.x, tx.pos.y, tx.pos.z } }, { "power_dbm", tx.power_dbm }, { "gain_const", tx.gain_const } });

		json j;
		j["format"] = "radiolam-scene-v1";
		j["grid"] = grid_to_json(g);
		j["env_label"] = std::string(to_string(scene.env_label));
		j["freq_mhz"] = scene.freq_mhz;
		j["normalization"] = { { "lo_dbm", scene.bounds.lo_dbm }, { "hi_dbm", scene.bounds.hi_dbm } };
		j["files"] = { { "buildings", "buildings.rmt" }, { "terrain", "terrain.rmt" }, { "truth", truth_files } };
		j["transmitters"] = { { "hidden", true }, { "list", txs } };
		write_text_file(manifest_path, j.dump(2) + "\n");
	}

	Scene load_scene(const fs::path &manifest_path)
	{
		try
		{
			return load_scene_impl(manifest_path, true);
		} catch (const json::exception &e)
		{
			throw FormatError("manifest error in " + manifest_path.string() + ": " + e.what());
		}
	}

	Scene load_scene_for_estimation(const fs::path &manifest_path)
	{
		try
		{
			return load_scene_impl(manifest_path, false);
		} catch (const json::exception &e)
		{
			throw FormatError("manifest error in " + manifest_path.string() + ": " + e.what());
		}
	}

	void write_samples_csv(const fs::path &path, const SampleSet &samples)
	{
		std::ostringstream out;
		out << "x,y,h,rss\n";
		out.precision(9);
		for (const Sample &s : samples.samples)
			out << s.x << ',' << s.y << ',' << s.h << ',' << s.rss << '\n';
		write_text_file(path, out.str());
	}

	SampleSet read_samples_csv(const fs::path &path, const GridSpec &grid)
	{
		std::istringstream in(read_text_file(path));
		std::string line;
		if (!std::getline(in, line) || line.substr(0, 9) != "x,y,h,rss")
			throw FormatError("samples CSV must start with header x,y,h,rss: " + path.string());
		SampleSet set;
		set.grid = grid;
		while (std::getline(in, line))
		{
			if (line.empty() || line == "\r")
				continue;
			std::istringstream row(line);
			Sample s;
			char c1 = 0, c2 = 0, c3 = 0;
			if (!(row >> s.x >> c1 >> s.y >> c2 >> s.h >> c3 >> s.rss) || c1 != ',' || c2 != ',' || c3 != ',')
				throw FormatError("malformed samples row: " + line);
			set.samples.push_back(s);
		}
		try
		{
			set.validate();
		} catch (const InvalidArgument &e)
		{
			throw FormatError(std::string("invalid samples file: ") + e.what());
		}
		return set;
	}

	void write_pgm(const fs::path &path, const Map2D &map)
	{
		std::ofstream out(path, std::ios::binary | std::ios::trunc);
		if (!out)
			throw IoError("cannot open for writing: " + path.string());
		// width = y_dim, height = x_dim so that row x of the map is a PGM row
		out << "P5\n" << map.y_dim << ' ' << map.x_dim << "\n255\n";
		std::vector<unsigned char> pixels(map.size());
		for (std::size_t i = 0; i < map.size(); i++)
		{
			const double v = std::clamp(static_cast<double>(map.data[i]), 0.0, 1.0);
			pixels[i] = static_cast<unsigned char>(std::lround(255.0 * v));
		}
		out.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
		if (!out)
			throw IoError("write failed: " + path.string());
	}

	std::string read_text_file(const fs::path &path)
	{
		std::ifstream in(path, std::ios::binary);
		if (!in)
			throw MissingFile("cannot open: " + path.string());
		std::ostringstream ss;
		ss << in.rdbuf();
		return ss.str();
	}

	void write_text_file(const fs::path &path, const std::string &text)
	{
		std::ofstream out(path, std::ios::binary | std::ios::trunc);
		if (!out)
			throw IoError("cannot open for writing: " + path.string());
		out << text;
		if (!out)
			throw IoError("write failed: " + path.string());
	}
}
