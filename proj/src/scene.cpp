#include <radiolam/scene.hpp>
#include <radiolam/propagation.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>
#include <tuple>

namespace radiolam
{
	void GridSpec::validate() const
	{
		if (x_dim < 8 || y_dim < 8)
			throw InvalidArgument("grid too small: x_dim and y_dim must be at least 8");
		if (h_dim < 2)
			throw InvalidArgument("grid too small: h_dim must be at least 2");
		if (!(cell_size_m > 0.0))
			throw InvalidArgument("cell_size_m must be positive");
		if (heights_m.size() != static_cast<std::size_t>(h_dim))
			throw InvalidArgument("heights_m must list one altitude per slice");
		for (std::size_t i = 0; i < heights_m.size(); i++)
		{
			if (!(heights_m[i] > 0.0))
				throw InvalidArgument("heights_m must be positive");
			if (i > 0 && !(heights_m[i] > heights_m[i - 1]))
				throw InvalidArgument("heights_m must be strictly increasing");
		}
	}

	double GridSpec::layer_bottom_m(int h) const
	{
		if (h <= 0)
			return 0.0;
		return 0.5 * (heights_m.at(h - 1) + heights_m.at(h));
	}

	double GridSpec::layer_top_m(int h) const
	{
		if (h >= h_dim - 1)
			return std::numeric_limits<double>::infinity();
		return 0.5 * (heights_m.at(h) + heights_m.at(h + 1));
	}

	BuildingMask::BuildingMask(int x_dim, int y_dim, int h_dim) :
			m_x(x_dim),
			m_y(y_dim),
			m_h(h_dim),
			m_data(static_cast<std::size_t>(x_dim) * y_dim * h_dim, 0)
	{
	}

	void BuildingMask::set_column(int x, int y, int levels) noexcept
	{
		for (int h = 0; h < m_h; h++)
			set(x, y, h, h < levels);
	}

	int BuildingMask::column_levels(int x, int y) const noexcept
	{
		int levels = 0;
		while (levels < m_h && occupied(x, y, levels))
			levels++;
		return levels;
	}

	double BuildingMask::ground_density() const noexcept
	{
		if (m_x == 0 || m_y == 0)
			return 0.0;
		std::size_t count = 0;
		for (int x = 0; x < m_x; x++)
			for (int y = 0; y < m_y; y++)
				count += occupied(x, y, 0) ? 1 : 0;
		return static_cast<double>(count) / (static_cast<double>(m_x) * m_y);
	}

	Map2D BuildingMask::slice(int h) const
	{
		Map2D result(m_x, m_y);
		for (int x = 0; x < m_x; x++)
			for (int y = 0; y < m_y; y++)
				result.at(x, y) = occupied(x, y, h) ? 1.0f : 0.0f;
		return result;
	}

	void BuildingMask::validate() const
	{
		for (int x = 0; x < m_x; x++)
			for (int y = 0; y < m_y; y++)
				for (int h = 1; h < m_h; h++)
					if (occupied(x, y, h) && !occupied(x, y, h - 1))
						throw InvalidArgument("building voxel above a free voxel");
	}

	std::string_view to_string(EnvLabel env) noexcept
	{
		switch (env)
		{
			case EnvLabel::rural:
				return "rural";
			case EnvLabel::suburban:
				return "suburban";
			case EnvLabel::urban:
				return "urban";
			case EnvLabel::dense_urban:
				return "dense_urban";
		}
		return "rural";
	}

	EnvLabel env_from_string(std::string_view name)
	{
		for (EnvLabel env : kAllEnvs)
			if (to_string(env) == name)
				return env;
		throw InvalidArgument("unknown environment label: " + std::string(name));
	}

	EnvLabel env_from_density(double rho) noexcept
	{
		if (rho < 0.02)
			return EnvLabel::rural;
		if (rho < 0.08)
			return EnvLabel::suburban;
		if (rho <= 0.2)
			return EnvLabel::urban;
		return EnvLabel::dense_urban;
	}

	double normalize_rss(double p_dbm, double lo_dbm, double hi_dbm)
	{
		if (!(hi_dbm > lo_dbm))
			throw InvalidArgument("normalization bounds require hi > lo");
		if (std::isnan(p_dbm))
			return 0.0;
		return std::clamp((p_dbm - lo_dbm) / (hi_dbm - lo_dbm), 0.0, 1.0);
	}

	Vec3 SampleSet::position(std::size_t i) const
	{
		const Sample &s = samples.at(i);
		return Vec3 { static_cast<double>(s.x), static_cast<double>(s.y), grid.height_cells(s.h) };
	}

	void SampleSet::validate() const
	{
		std::set<std::tuple<int, int, int>> seen;
		for (const Sample &s : samples)
		{
			if (s.x < 0 || s.y < 0 || s.h < 0 || s.x >= grid.x_dim || s.y >= grid.y_dim || s.h >= grid.h_dim)
				throw InvalidArgument("sample index out of range");
			if (!(s.rss >= 0.0f && s.rss <= 1.0f))
				throw InvalidArgument("sample rss outside [0, 1]");
			if (!seen.emplace(s.x, s.y, s.h).second)
				throw InvalidArgument("duplicate sample cell");
		}
	}

	std::size_t free_cell_count(const BuildingMask &buildings) noexcept
	{
		return static_cast<std::size_t>(std::count(buildings.raw().begin(), buildings.raw().end(), std::uint8_t { 0 }));
	}

	namespace
	{
		struct EnvProfile
		{
			double rho_lo;
			double rho_hi;
			int max_side;
			double p_tall;
			double relief_m;
		};

		// Density bands sit strictly inside the classification thresholds so labels always agree.
		EnvProfile profile_for(EnvLabel env) noexcept
		{
			switch (env)
			{
				case EnvLabel::rural:
					return { 0.0, 0.015, 1, 0.0, 60.0 };
				case EnvLabel::suburban:
					return { 0.03, 0.07, 2, 0.05, 30.0 };
				case EnvLabel::urban:
					return { 0.10, 0.18, 3, 0.3, 15.0 };
				case EnvLabel::dense_urban:
					return { 0.25, 0.40, 4, 0.6, 10.0 };
			}
			return { 0.0, 0.015, 1, 0.0, 60.0 };
		}

		BuildingMask make_buildings(const GridSpec &grid, const EnvProfile &profile, std::mt19937_64 &rng)
		{
			BuildingMask mask(grid.x_dim, grid.y_dim, grid.h_dim);
			std::uniform_real_distribution<double> unit(0.0, 1.0);
			const double target = profile.rho_lo + (profile.rho_hi - profile.rho_lo) * unit(rng);
			const double cells = static_cast<double>(grid.plane_size());
			const int max_levels = std::max(1, grid.h_dim - 1);

			std::size_t occupied = 0;
			for (int attempt = 0; attempt < 20000 && occupied / cells < target; attempt++)
			{
				std::uniform_int_distribution<int> side(1, profile.max_side);
				const int w = side(rng);
				const int l = side(rng);
				const int x0 = std::uniform_int_distribution<int>(0, grid.x_dim - w)(rng);
				const int y0 = std::uniform_int_distribution<int>(0, grid.y_dim - l)(rng);
				const int levels = std::min(max_levels, unit(rng) < profile.p_tall ? 2 : 1);

				std::size_t added = 0;
				for (int x = x0; x < x0 + w; x++)
					for (int y = y0; y < y0 + l; y++)
						added += mask.occupied(x, y, 0) ? 0 : 1;
				if ((occupied + added) / cells > profile.rho_hi)
					continue;
				for (int x = x0; x < x0 + w; x++)
					for (int y = y0; y < y0 + l; y++)
						mask.set_column(x, y, std::max(levels, mask.column_levels(x, y)));
				occupied += added;
			}
			return mask;
		}

		TerrainMap make_terrain(const GridSpec &grid, double relief_m, std::mt19937_64 &rng)
		{
			TerrainMap terrain { Map2D(grid.x_dim, grid.y_dim) };
			if (relief_m <= 0.0)
				return terrain;
			std::uniform_real_distribution<double> unit(0.0, 1.0);
			const int hills = 3;
			std::vector<double> raw(grid.plane_size(), 0.0);
			for (int k = 0; k < hills; k++)
			{
				const double cx = unit(rng) * grid.x_dim;
				const double cy = unit(rng) * grid.y_dim;
				const double width = 3.0 + unit(rng) * 0.25 * std::max(grid.x_dim, grid.y_dim);
				const double amp = 0.3 + 0.7 * unit(rng);
				for (int x = 0; x < grid.x_dim; x++)
					for (int y = 0; y < grid.y_dim; y++)
					{
						const double r2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
						raw[static_cast<std::size_t>(x) * grid.y_dim + y] += amp * std::exp(-r2 / (2.0 * width * width));
					}
			}
			const auto [mn, mx] = std::minmax_element(raw.begin(), raw.end());
			const double span = *mx - *mn;
			const double peak = relief_m * (0.5 + 0.5 * unit(rng));
			for (std::size_t i = 0; i < raw.size(); i++)
				terrain.elevation.data[i] = span > 0.0 ? static_cast<float>(peak * (raw[i] - *mn) / span) : 0.0f;
			return terrain;
		}
	}

	void render_truth(Scene &scene, const PropagationConfig &prop)
	{
		const GridSpec &grid = scene.grid;
		scene.truth_maps.assign(static_cast<std::size_t>(grid.h_dim), Map2D(grid.x_dim, grid.y_dim));
		for (int h = 0; h < grid.h_dim; h++)
			for (int x = 0; x < grid.x_dim; x++)
				for (int y = 0; y < grid.y_dim; y++)
				{
					float value = 0.0f;
					if (!scene.buildings.occupied(x, y, h))
					{
						const double dbm = oracle_power_dbm(grid, scene.buildings, scene.terrain, scene.transmitters, x, y,
								grid.heights_m[h], prop);
						value = static_cast<float>(normalize_rss(dbm, scene.bounds));
					}
					scene.truth_maps[h].at(x, y) = value;
				}
	}

	Scene generate_scene(const SceneGenConfig &cfg, std::uint64_t seed)
	{
		cfg.grid.validate();
		if (cfg.tx_min < 1 || cfg.tx_max < cfg.tx_min)
			throw InvalidArgument("transmitter count range must be at least 1");
		if (!(cfg.bounds.hi_dbm > cfg.bounds.lo_dbm))
			throw InvalidArgument("normalization bounds require hi > lo");

		std::mt19937_64 rng(seed);
		const EnvProfile profile = profile_for(cfg.env_label);

		Scene scene;
		scene.grid = cfg.grid;
		scene.env_label = cfg.env_label;
		scene.freq_mhz = cfg.freq_mhz;
		scene.bounds = cfg.bounds;
		scene.buildings = make_buildings(cfg.grid, profile, rng);
		scene.terrain = make_terrain(cfg.grid, cfg.terrain_relief_m.value_or(profile.relief_m), rng);

		std::uniform_real_distribution<double> unit(0.0, 1.0);
		const int count = std::uniform_int_distribution<int>(cfg.tx_min, cfg.tx_max)(rng);
		const double ceiling_m = cfg.grid.heights_m.back();
		for (int i = 0; i < count; i++)
		{
			Transmitter tx;
			int x = 0;
			int y = 0;
			double roof_m = 0.0;
			// columns whose roof reaches the top layer cannot host a mast inside the grid
			for (int attempt = 0; attempt < 1000; attempt++)
			{
				x = std::uniform_int_distribution<int>(0, cfg.grid.x_dim - 1)(rng);
				y = std::uniform_int_distribution<int>(0, cfg.grid.y_dim - 1)(rng);
				const int levels = scene.buildings.column_levels(x, y);
				roof_m = levels == 0 ? 0.0 : cfg.grid.layer_top_m(levels - 1);
				if (roof_m + cfg.mast_min_m <= ceiling_m)
					break;
			}
			const double mast = cfg.mast_min_m + (cfg.mast_max_m - cfg.mast_min_m) * unit(rng);
			const double height_m = std::min(roof_m + mast, ceiling_m);
			tx.pos = Vec3 { static_cast<double>(x), static_cast<double>(y), height_m / cfg.grid.cell_size_m };
			tx.power_dbm = cfg.tx_power_min_dbm + (cfg.tx_power_max_dbm - cfg.tx_power_min_dbm) * unit(rng);
			tx.gain_const = gain_const_from_power(tx.power_dbm, cfg.grid.cell_size_m, cfg.freq_mhz);
			scene.transmitters.push_back(tx);
		}

		render_truth(scene, cfg.propagation);
		return scene;
	}

	SampleSet draw_samples(const Scene &scene, std::size_t k, std::uint64_t seed)
	{
		const GridSpec &grid = scene.grid;
		std::vector<Sample> free_cells;
		free_cells.reserve(grid.volume_size());
		for (int x = 0; x < grid.x_dim; x++)
			for (int y = 0; y < grid.y_dim; y++)
				for (int h = 0; h < grid.h_dim; h++)
					if (!scene.buildings.occupied(x, y, h))
						free_cells.push_back(Sample { x, y, h, scene.truth_maps[h].at(x, y) });
		if (k > free_cells.size())
			throw InvalidArgument("requested more samples than free cells");

		std::mt19937_64 rng(seed);
		for (std::size_t i = 0; i < k; i++)
		{
			const std::size_t j = std::uniform_int_distribution<std::size_t>(i, free_cells.size() - 1)(rng);
			std::swap(free_cells[i], free_cells[j]);
		}
		free_cells.resize(k);
		return SampleSet { std::move(free_cells), grid };
	}
}
