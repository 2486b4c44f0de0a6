#pragma once

#include <radiolam/scene.hpp>

namespace radiolam
{
	/// Obstructions met by the straight segment from a transmitter to a receiver point.
	struct PathObstruction
	{
		int building_voxels = 0;
		bool terrain_blocked = false;
	};

	/// Walks the columns crossed by the segment tx -> (x, y, height_m above ground) and counts
	/// occupied building voxels it passes through (2D DDA over columns, exact altitude interval per
	/// column against the non-uniform vertical layers). Terrain blocks the path when the segment
	/// dips below the ground of any crossed column.
	PathObstruction trace_path(const GridSpec &grid, const BuildingMask &buildings, const TerrainMap &terrain,
			const Vec3 &tx, int x, int y, double height_m);

	/// Free-space loss at one cell of distance, the reference for gain constants.
	double reference_loss_db(double cell_size_m, double freq_mhz);

	/// Linear gain constant (mW at 1 cell) for a transmitter of the given power.
	double gain_const_from_power(double power_dbm, double cell_size_m, double freq_mhz);

	/// Received power in dBm at (x, y, height_m) summed over transmitters in linear mW.
	/// Distances are clamped to at least one cell. Returns -infinity when no power arrives.
	double oracle_power_dbm(const GridSpec &grid, const BuildingMask &buildings, const TerrainMap &terrain,
			std::span<const Transmitter> txs, int x, int y, double height_m, const PropagationConfig &prop);
}
