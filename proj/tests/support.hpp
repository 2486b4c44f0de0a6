#pragma once

#include <radiolam/moe.hpp>
#include <radiolam/scene.hpp>

#include <filesystem>
#include <random>
#include <string>

namespace radiolam::test
{
	inline Map2D random_map(int x_dim, int y_dim, std::uint64_t seed)
	{
		std::mt19937_64 rng(seed);
		std::uniform_real_distribution<float> u(0.0f, 1.0f);
		Map2D m(x_dim, y_dim);
		for (float &v : m.data)
			v = u(rng);
		return m;
	}

	inline SceneGenConfig small_scene_config(EnvLabel env, int side = 16)
	{
		SceneGenConfig cfg;
		cfg.grid.x_dim = side;
		cfg.grid.y_dim = side;
		cfg.env_label = env;
		return cfg;
	}

	/// Randomly initialised mixture with narrow experts; good enough to exercise plumbing.
	inline MoEParams tiny_moe(std::uint64_t seed, int channels = 4)
	{
		DenoiserArch arch;
		arch.channels = channels;
		arch.time_dim = 8;
		MoEParams moe;
		moe.schedule = make_schedule(50, 1e-4, 0.02);
		moe.shared.net = Denoiser(arch);
		nn::init_uniform(moe.shared.net.params(), mix_seed(seed, 0));
		for (int e = 0; e < kEnvCount; e++)
		{
			ExpertParams x;
			x.net = Denoiser(arch);
			x.expert_id = e + 1;
			x.domain = std::string(to_string(static_cast<EnvLabel>(e)));
			nn::init_uniform(x.net.params(), mix_seed(seed, 1 + static_cast<std::uint64_t>(e)));
			moe.domain_experts.push_back(x);
		}
		moe.router = Router(RouterArch { 4, kEnvCount });
		nn::init_uniform(moe.router.params(), mix_seed(seed, 9));
		moe.meta.var_threshold = 0.5;
		return moe;
	}

	/// Fresh empty directory under the system temp dir.
	inline std::filesystem::path scratch_dir(const std::string &name)
	{
		const std::filesystem::path dir = std::filesystem::temp_directory_path() / ("radiolam_test_" + name);
		std::filesystem::remove_all(dir);
		std::filesystem::create_directories(dir);
		return dir;
	}
}
