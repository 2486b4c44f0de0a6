#pragma once

#include <radiolam/common.hpp>

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace radiolam
{
	/// Discretization of the 3D region: x_dim × y_dim columns of square cells, h_dim altitude slices.
	struct GridSpec
	{
		int x_dim = 32;
		int y_dim = 32;
		int h_dim = 3;
		double cell_size_m = 40.0;
		std::vector<double> heights_m { 1.5, 30.0, 200.0 };

		/// Throws InvalidArgument when any dimension or height constraint is violated.
		void validate() const;

		std::size_t plane_size() const noexcept
		{
			return static_cast<std::size_t>(x_dim) * static_cast<std::size_t>(y_dim);
		}
		std::size_t volume_size() const noexcept
		{
			return plane_size() * static_cast<std::size_t>(h_dim);
		}
		/// Altitude of slice h expressed in horizontal cell units.
		double height_cells(int h) const
		{
			return heights_m.at(static_cast<std::size_t>(h)) / cell_size_m;
		}
		/// Lower altitude bound (meters above ground) of the voxel layer that slice h represents.
		double layer_bottom_m(int h) const;
		/// Upper altitude bound; +infinity for the top slice.
		double layer_top_m(int h) const;

		friend bool operator==(const GridSpec&, const GridSpec&) = default;
	};

	/// Occupancy of the x_dim × y_dim × h_dim voxel grid. Buildings rise from the ground.
	class BuildingMask
	{
		public:
			BuildingMask() = default;
			BuildingMask(int x_dim, int y_dim, int h_dim);

			bool occupied(int x, int y, int h) const noexcept
			{
				return m_data[index(x, y, h)] != 0;
			}
			void set(int x, int y, int h, bool value) noexcept
			{
				m_data[index(x, y, h)] = value ? 1 : 0;
			}
			/// Marks slices [0, levels) of column (x, y) occupied and the rest free.
			void set_column(int x, int y, int levels) noexcept;
			/// Number of occupied slices in column (x, y).
			int column_levels(int x, int y) const noexcept;

			int x_dim() const noexcept
			{
				return m_x;
			}
			int y_dim() const noexcept
			{
				return m_y;
			}
			int h_dim() const noexcept
			{
				return m_h;
			}
			/// Fraction of ground cells (slice 0) that are occupied.
			double ground_density() const noexcept;
			/// 0/1 plane of slice h.
			Map2D slice(int h) const;
			bool matches(const GridSpec &grid) const noexcept
			{
				return m_x == grid.x_dim && m_y == grid.y_dim && m_h == grid.h_dim;
			}
			/// Throws InvalidArgument if some occupied voxel floats above a free one.
			void validate() const;

			const std::vector<std::uint8_t>& raw() const noexcept
			{
				return m_data;
			}

			friend bool operator==(const BuildingMask&, const BuildingMask&) = default;

		private:
			std::size_t index(int x, int y, int h) const noexcept
			{
				return (static_cast<std::size_t>(x) * m_y + y) * m_h + h;
			}

			int m_x = 0;
			int m_y = 0;
			int m_h = 0;
			std::vector<std::uint8_t> m_data;
	};

	/// Ground elevation in meters, one value per column.
	struct TerrainMap
	{
		Map2D elevation;

		float at(int x, int y) const noexcept
		{
			return elevation.at(x, y);
		}
		friend bool operator==(const TerrainMap&, const TerrainMap&) = default;
	};

	/// A transmitter. pos is in cell units; pos.z is the height above local ground in cell units.
	/// gain_const folds transmit power, antenna gains, wavelength and system loss into one
	/// linear constant: received power = gain_const * d^-n.
	struct Transmitter
	{
		Vec3 pos;
		double power_dbm = 0.0;
		double gain_const = 0.0;

		friend bool operator==(const Transmitter&, const Transmitter&) = default;
	};

	enum class EnvLabel
	{
		rural = 0, suburban = 1, urban = 2, dense_urban = 3
	};
	inline constexpr int kEnvCount = 4;
	inline constexpr std::array<EnvLabel, kEnvCount> kAllEnvs { EnvLabel::rural, EnvLabel::suburban, EnvLabel::urban,
			EnvLabel::dense_urban };

	std::string_view to_string(EnvLabel env) noexcept;
	EnvLabel env_from_string(std::string_view name);
	/// Classifies ground building density: rural < 0.02 <= suburban < 0.08 <= urban <= 0.2 < dense_urban.
	EnvLabel env_from_density(double rho) noexcept;

	/// dBm range mapped onto [0, 1].
	struct NormBounds
	{
		double lo_dbm = -150.0;
		double hi_dbm = -40.0;

		friend bool operator==(const NormBounds&, const NormBounds&) = default;
	};

	/// Linear clamp of a dBm value into [0, 1]. Throws InvalidArgument when hi <= lo.
	double normalize_rss(double p_dbm, double lo_dbm, double hi_dbm);
	inline double normalize_rss(double p_dbm, const NormBounds &b)
	{
		return normalize_rss(p_dbm, b.lo_dbm, b.hi_dbm);
	}

	/// Parameters of the synthetic propagation oracle.
	struct PropagationConfig
	{
		double path_loss_n = 2.0;
		double wall_loss_db = 15.0;
		double terrain_block_db = 25.0;
	};

	struct Scene
	{
		GridSpec grid;
		BuildingMask buildings;
		TerrainMap terrain;
		EnvLabel env_label = EnvLabel::rural;
		/// Ground truth geometry of the emitters. Estimators never read this.
		std::vector<Transmitter> transmitters;
		/// One normalized plane per altitude slice.
		std::vector<Map2D> truth_maps;
		double freq_mhz = 3500.0;
		NormBounds bounds;

		friend bool operator==(const Scene&, const Scene&) = default;
	};

	struct Sample
	{
		int x = 0;
		int y = 0;
		int h = 0;
		float rss = 0.0f;

		friend bool operator==(const Sample&, const Sample&) = default;
	};

	struct SampleSet
	{
		std::vector<Sample> samples;
		GridSpec grid;

		std::size_t size() const noexcept
		{
			return samples.size();
		}
		bool empty() const noexcept
		{
			return samples.empty();
		}
		/// 3D position of sample i in cell units (heights converted via cell size).
		Vec3 position(std::size_t i) const;
		/// Throws InvalidArgument on out-of-range indices or duplicate cells.
		void validate() const;

		friend bool operator==(const SampleSet&, const SampleSet&) = default;
	};

	struct SceneGenConfig
	{
		GridSpec grid;
		EnvLabel env_label = EnvLabel::urban;
		int tx_min = 1;
		int tx_max = 3;
		double freq_mhz = 3500.0;
		double tx_power_min_dbm = 20.0;
		double tx_power_max_dbm = 40.0;
		/// Mast height added on top of the ground or roof of the chosen column.
		double mast_min_m = 10.0;
		double mast_max_m = 40.0;
		/// Peak terrain relief; std::nullopt picks a per-environment default.
		std::optional<double> terrain_relief_m;
		PropagationConfig propagation;
		NormBounds bounds;
	};

	/// Builds a labeled synthetic scene. Pure function of (cfg, seed).
	Scene generate_scene(const SceneGenConfig &cfg, std::uint64_t seed);

	/// Recomputes truth_maps from geometry and transmitters with the propagation oracle.
	void render_truth(Scene &scene, const PropagationConfig &prop);

	/// k distinct non-building cells, uniformly at random. Pure function of (scene, k, seed).
	SampleSet draw_samples(const Scene &scene, std::size_t k, std::uint64_t seed);

	/// Number of voxels not occupied by buildings.
	std::size_t free_cell_count(const BuildingMask &buildings) noexcept;
}
