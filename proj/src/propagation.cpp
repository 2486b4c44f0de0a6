#include <radiolam/propagation.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace radiolam
{
	namespace
	{
		int clamp_index(double v, int dim) noexcept
		{
			return std::clamp(static_cast<int>(std::lround(v)), 0, dim - 1);
		}

		struct ColumnVisit
		{
			int x;
			int y;
			double t0;
			double t1;
		};

		// Amanatides & Woo traversal over unit columns. Coordinates are cell centers, so column i
		// spans [i - 0.5, i + 0.5).
		template<typename Visit>
		void walk_columns(double x0, double y0, double x1, double y1, int x_dim, int y_dim, Visit &&visit)
		{
			const double sx = x0 + 0.5;
			const double sy = y0 + 0.5;
			const double dx = x1 - x0;
			const double dy = y1 - y0;

			int cx = std::clamp(static_cast<int>(std::floor(sx)), 0, x_dim - 1);
			int cy = std::clamp(static_cast<int>(std::floor(sy)), 0, y_dim - 1);
			const int ex = clamp_index(x1, x_dim);
			const int ey = clamp_index(y1, y_dim);

			constexpr double inf = std::numeric_limits<double>::infinity();
			const int step_x = dx > 0 ? 1 : (dx < 0 ? -1 : 0);
			const int step_y = dy > 0 ? 1 : (dy < 0 ? -1 : 0);
			const double delta_x = step_x != 0 ? std::abs(1.0 / dx) : inf;
			const double delta_y = step_y != 0 ? std::abs(1.0 / dy) : inf;
			double next_x = inf;
			double next_y = inf;
			if (step_x > 0)
				next_x = (cx + 1 - sx) / dx;
			else if (step_x < 0)
				next_x = (cx - sx) / dx;
			if (step_y > 0)
				next_y = (cy + 1 - sy) / dy;
			else if (step_y < 0)
				next_y = (cy - sy) / dy;

			double t = 0.0;
			const int max_steps = x_dim + y_dim + 4;
			for (int i = 0; i < max_steps; i++)
			{
				const bool last = (cx == ex && cy == ey) || std::min(next_x, next_y) >= 1.0;
				const double t_exit = last ? 1.0 : std::min(next_x, next_y);
				visit(ColumnVisit { cx, cy, t, t_exit });
				if (last)
					return;
				t = t_exit;
				if (next_x < next_y)
				{
					cx += step_x;
					next_x += delta_x;
				}
				else
				{
					cy += step_y;
					next_y += delta_y;
				}
				if (cx < 0 || cy < 0 || cx >= x_dim || cy >= y_dim)
					return;
			}
		}
	}

	PathObstruction trace_path(const GridSpec &grid, const BuildingMask &buildings, const TerrainMap &terrain,
			const Vec3 &tx, int x, int y, double height_m)
	{
		const int tcx = clamp_index(tx.x, grid.x_dim);
		const int tcy = clamp_index(tx.y, grid.y_dim);
		const double alt0 = terrain.at(tcx, tcy) + tx.z * grid.cell_size_m;
		const double alt1 = terrain.at(x, y) + height_m;

		PathObstruction result;
		walk_columns(tx.x, tx.y, x, y, grid.x_dim, grid.y_dim, [&](const ColumnVisit &c)
		{
			const double ground = terrain.at(c.x, c.y);
			const double a = alt0 + c.t0 * (alt1 - alt0) - ground;
			const double b = alt0 + c.t1 * (alt1 - alt0) - ground;
			const double lo = std::min(a, b);
			const double hi = std::max(a, b);
			if (lo < -1e-9)
				result.terrain_blocked = true;
			const int levels = buildings.column_levels(c.x, c.y);
			for (int h = 0; h < levels; h++)
				if (lo < grid.layer_top_m(h) && hi >= grid.layer_bottom_m(h))
					result.building_voxels++;
		});
		return result;
	}

	double reference_loss_db(double cell_size_m, double freq_mhz)
	{
		return 20.0 * std::log10(cell_size_m / 1000.0) + 20.0 * std::log10(freq_mhz) + 32.44;
	}

	double gain_const_from_power(double power_dbm, double cell_size_m, double freq_mhz)
	{
		return std::pow(10.0, (power_dbm - reference_loss_db(cell_size_m, freq_mhz)) / 10.0);
	}

	double oracle_power_dbm(const GridSpec &grid, const BuildingMask &buildings, const TerrainMap &terrain,
			std::span<const Transmitter> txs, int x, int y, double height_m, const PropagationConfig &prop)
	{
		double total_mw = 0.0;
		const double rx_alt = terrain.at(x, y) + height_m;
		for (const Transmitter &tx : txs)
		{
			const int tcx = clamp_index(tx.pos.x, grid.x_dim);
			const int tcy = clamp_index(tx.pos.y, grid.y_dim);
			const double tx_alt = terrain.at(tcx, tcy) + tx.pos.z * grid.cell_size_m;
			const double dz = (rx_alt - tx_alt) / grid.cell_size_m;
			const double dx = x - tx.pos.x;
			const double dy = y - tx.pos.y;
			const double d = std::max(std::sqrt(dx * dx + dy * dy + dz * dz), 1.0);

			const PathObstruction obs = trace_path(grid, buildings, terrain, tx.pos, x, y, height_m);
			const double loss_db = obs.building_voxels * prop.wall_loss_db + (obs.terrain_blocked ? prop.terrain_block_db : 0.0);
			total_mw += tx.gain_const * std::pow(d, -prop.path_loss_n) * std::pow(10.0, -loss_db / 10.0);
		}
		if (total_mw <= 0.0)
			return -std::numeric_limits<double>::infinity();
		return 10.0 * std::log10(total_mw);
	}
}
