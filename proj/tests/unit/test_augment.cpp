#include <radiolam/augment.hpp>
#include <radiolam/baselines.hpp>

#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace radiolam;
using namespace radiolam::augment;

namespace
{
	GridSpec grid16()
	{
		GridSpec g;
		g.x_dim = 16;
		g.y_dim = 16;
		return g;
	}

	/// Every cell of every plane sampled from a pure power-law field (normalized units).
	SampleSet dense_free_space(const GridSpec &g, std::span<const Transmitter> txs, double n, int step = 1)
	{
		SampleSet set;
		set.grid = g;
		for (int x = 0; x < g.x_dim; x += step)
			for (int y = 0; y < g.y_dim; y += step)
				for (int h = 0; h < g.h_dim; h++)
				{
					const Vec3 p { double(x), double(y), g.height_cells(h) };
					set.samples.push_back(Sample { x, y, h, static_cast<float>(free_space_predict(p, txs, n)) });
				}
		return set;
	}

	struct Context
	{
		GridSpec grid;
		BuildingMask buildings;
		TerrainMap terrain;

		explicit Context(const GridSpec &g) :
				grid(g),
				buildings(g.x_dim, g.y_dim, g.h_dim),
				terrain { Map2D(g.x_dim, g.y_dim) }
		{
		}
		SceneContext view() const
		{
			return SceneContext { grid, 3500.0, NormBounds {}, &buildings, &terrain };
		}
	};
}

TEST(Params, Validate)
{
	AugmentParams p;
	EXPECT_NO_THROW(p.validate());
	p.u_scale_m = 0.0;
	EXPECT_THROW(p.validate(), InvalidArgument);
	p = AugmentParams {};
	p.theta = 1.0;
	EXPECT_THROW(p.validate(), InvalidArgument);
	p = AugmentParams {};
	p.hata_enabled = false;
	p.free_space_enabled = false;
	EXPECT_THROW(p.validate(), InvalidArgument);
	p = AugmentParams {};
	p.path_loss_n = -1.0;
	EXPECT_THROW(p.validate(), InvalidArgument);
}

TEST(FreeSpace, ClosedForms)
{
	const std::vector<Transmitter> one { Transmitter { Vec3 { 0, 0, 0 }, 0, 1.0 } };
	EXPECT_DOUBLE_EQ(free_space_predict(Vec3 { 10, 0, 0 }, one, 2.0), 0.01);
	const std::vector<Transmitter> two { Transmitter { Vec3 { -2, 0, 0 }, 0, 0.02 }, Transmitter { Vec3 { 2, 0, 0 }, 0, 0.02 } };
	EXPECT_NEAR(free_space_predict(Vec3 { 0, 0, 0 }, two, 2.0), 0.01, 1e-15);
	const std::vector<Transmitter> half { Transmitter { Vec3 { 3, 3, 1 }, 0, 0.5 } };
	EXPECT_DOUBLE_EQ(free_space_predict(Vec3 { 3, 3, 1 }, half, 2.0), 0.5);
	const std::vector<Transmitter> big { Transmitter { Vec3 { 3, 3, 1 }, 0, 5.0 } };
	EXPECT_EQ(free_space_predict(Vec3 { 3, 3, 1 }, big, 2.0), 1.0);
	EXPECT_THROW(free_space_predict(Vec3 {}, std::vector<Transmitter> {}, 2.0), InvalidArgument);
}

TEST(Hata, DerivedValuesAt3500)
{
	// independent long double evaluation of the closed form
	const long double lf = std::log10(3500.0L);
	auto a = [&](long double h)
	{
		return (1.1L * lf - 0.7L) * h - (1.56L * lf - 0.8L);
	};
	EXPECT_NEAR(hata_correction(1.5, 3500.0), static_cast<double>(a(1.5L)), 1e-12);
	EXPECT_NEAR(hata_correction(1.5, 3500.0), 0.069, 5e-4);
	EXPECT_NEAR(hata_correction(30.0, 3500.0) - hata_correction(1.5, 3500.0), static_cast<double>(a(30.0L) - a(1.5L)), 1e-12);
	EXPECT_NEAR(hata_correction(30.0, 3500.0) - hata_correction(1.5, 3500.0), 91.16, 5e-3);
	EXPECT_THROW(hata_correction(0.0, 3500.0), InvalidArgument);
	EXPECT_THROW(hata_correction(1.5, -1.0), InvalidArgument);
}

TEST(Hata, DifferenceIsAntisymmetric)
{
	std::mt19937_64 rng(5);
	std::uniform_real_distribution<double> h(0.5, 300.0), f(150.0, 6000.0);
	for (int i = 0; i < 200; i++)
	{
		const double h1 = h(rng), h2 = h(rng), fr = f(rng);
		const double d12 = hata_correction(h1, fr) - hata_correction(h2, fr);
		const double d21 = hata_correction(h2, fr) - hata_correction(h1, fr);
		EXPECT_EQ(d12, -d21);
	}
}

TEST(Hata, ProjectionRules)
{
	const NormBounds b;
	const Sample s { 1, 1, 0, 0.37f };
	EXPECT_EQ(hata_project(s, 30.0, 30.0, 3500.0, b), double(s.rss));
	// choose heights whose correction difference is exactly +55 dB, half the 110 dB range
	const double slope = 1.1 * std::log10(3500.0) - 0.7;
	const double src = 10.0 + 55.0 / slope;
	const Sample low { 1, 1, 0, 0.2f };
	EXPECT_NEAR(hata_project(low, 10.0, src, 3500.0, b), 0.2f + 0.5, 1e-9);
	const Sample high { 1, 1, 0, 0.8f };
	EXPECT_EQ(hata_project(high, 10.0, src, 3500.0, b), 1.0);
	EXPECT_NEAR(hata_project(high, src, 10.0, 3500.0, b), 0.8f - 0.5, 1e-9);
	EXPECT_EQ(hata_project(low, src, 10.0, 3500.0, b), 0.0);
}

TEST(Blend, Triple)
{
	EXPECT_EQ(blend_weight(0.0, 20.0), 1.0);
	EXPECT_EQ(blend_weight(20.0, 20.0), 0.5);
	EXPECT_EQ(blend_weight(40.0, 20.0), 0.25);
	EXPECT_THROW(blend_weight(1.0, 0.0), InvalidArgument);
}

TEST(Blend, StrictlyDecreasingInUnitInterval)
{
	for (double u : { 1.0, 20.0, 150.0 })
	{
		double prev = 2.0;
		for (double h = 0.0; h <= 400.0; h += 0.5)
		{
			const double w = blend_weight(h, u);
			EXPECT_GT(w, 0.0);
			EXPECT_LE(w, 1.0);
			EXPECT_LT(w, prev);
			prev = w;
		}
	}
}

TEST(Localization, SingleTransmitterFound)
{
	const GridSpec g = grid16();
	const std::vector<Transmitter> truth { Transmitter { Vec3 { 5, 11, 60.0 / g.cell_size_m }, 0, 0.3 } };
	const SampleSet samples = dense_free_space(g, truth, 2.0, 2);
	const std::vector<Transmitter> found = estimate_transmitters(samples, g, AugmentParams {});
	ASSERT_FALSE(found.empty());
	EXPECT_LE(distance(found[0].pos, truth[0].pos), 2.0);
	EXPECT_EQ(found[0].gain_const, 0.0);
}

TEST(Localization, TwoDistantTransmitters)
{
	const GridSpec g = grid16();
	const std::vector<Transmitter> truth { Transmitter { Vec3 { 2, 2, 30.0 / g.cell_size_m }, 0, 0.2 },
			Transmitter { Vec3 { 13, 13, 30.0 / g.cell_size_m }, 0, 0.2 } };
	const SampleSet samples = dense_free_space(g, truth, 2.0);
	const std::vector<Transmitter> found = estimate_transmitters(samples, g, AugmentParams {});
	ASSERT_GE(found.size(), 2u);
	for (const Transmitter &t : truth)
	{
		double best = INFINITY;
		for (const Transmitter &f : found)
			best = std::min(best, distance(f.pos, t.pos));
		EXPECT_LE(best, 2.0);
	}
}

TEST(Localization, PeakIsGlobalArgmaxOfTheLattice)
{
	// brute force over the same interpolant: the strongest reported peak is the lattice argmax
	const GridSpec g = grid16();
	const Scene s = generate_scene(test::small_scene_config(EnvLabel::suburban), 12);
	const SampleSet samples = draw_samples(s, 24, 3);
	const std::vector<Transmitter> found = estimate_transmitters(samples, g, AugmentParams {});
	ASSERT_FALSE(found.empty());
	std::vector<Vec3> pts;
	std::vector<double> vals;
	for (std::size_t i = 0; i < samples.size(); i++)
	{
		pts.push_back(samples.position(i));
		vals.push_back(samples.samples[i].rss);
	}
	const baselines::GaussianRbf rbf(pts, vals, baselines::default_rbf_shape(g));
	double best = -INFINITY;
	const double ztop = g.height_cells(g.h_dim - 1);
	for (int i = 0; i < 16; i++)
		for (int j = 0; j < 16; j++)
			for (int k = 0; k < 16; k++)
				best = std::max(best, rbf(Vec3 { double(i), double(j), (k + 0.5) * ztop / 16 }));
	EXPECT_NEAR(rbf(found[0].pos), best, 1e-12);
	EXPECT_LE(found.size(), 5u);
}

TEST(Localization, NeedsFourSamples)
{
	const GridSpec g = grid16();
	SampleSet set;
	set.grid = g;
	set.samples = { Sample { 1, 1, 0, 0.5f }, Sample { 2, 2, 0, 0.4f }, Sample { 3, 3, 1, 0.3f } };
	EXPECT_THROW(estimate_transmitters(set, g, AugmentParams {}), InsufficientData);
}

TEST(PowerFit, RecoversGainConstant)
{
	const GridSpec g = grid16();
	const Transmitter pos { Vec3 { 7, 4, 1.0 }, 0, 0.0 };
	std::vector<Transmitter> truth { pos };
	truth[0].gain_const = 0.04;
	const SampleSet samples = dense_free_space(g, truth, 2.0, 3);
	LmReport rep;
	const std::vector<Transmitter> fit = fit_power_params(samples, std::vector<Transmitter> { pos }, AugmentParams {}, &rep);
	ASSERT_EQ(fit.size(), 1u);
	EXPECT_LT(std::abs(fit[0].gain_const - 0.04) / 0.04, 1e-6);
	EXPECT_LT(rep.gradient_norm, AugmentParams {}.lm_tol);

	// brute-force 1D scan over K agrees with the fit
	double best_k = 0.0, best_cost = INFINITY;
	for (int i = 0; i <= 20000; i++)
	{
		const double k = 0.03 + i * 1e-6;
		double c = 0.0;
		for (std::size_t s = 0; s < samples.size(); s++)
		{
			const double d = std::max(distance(samples.position(s), pos.pos), 1.0);
			const double r = k / (d * d) - samples.samples[s].rss;
			c += r * r;
		}
		if (c < best_cost)
		{
			best_cost = c;
			best_k = k;
		}
	}
	EXPECT_NEAR(best_k, fit[0].gain_const, 1e-6);
}

TEST(PowerFit, TwoTransmitters)
{
	const GridSpec g = grid16();
	std::vector<Transmitter> truth { Transmitter { Vec3 { 2, 3, 1.0 }, 0, 0.05 }, Transmitter { Vec3 { 12, 12, 2.0 }, 0, 0.02 } };
	const SampleSet samples = dense_free_space(g, truth, 2.0, 2);
	std::vector<Transmitter> positions = truth;
	for (Transmitter &t : positions)
		t.gain_const = 0.0;
	const std::vector<Transmitter> fit = fit_power_params(samples, positions, AugmentParams {});
	EXPECT_NEAR(fit[0].gain_const, 0.05, 1e-6);
	EXPECT_NEAR(fit[1].gain_const, 0.02, 1e-6);
}

TEST(PowerFit, AlreadyOptimalStopsAtOnce)
{
	const GridSpec g = grid16();
	// the strongest sample sits at distance 1, so the initial K equals its value exactly
	SampleSet set;
	set.grid = g;
	const Transmitter pos { Vec3 { 4, 4, g.height_cells(0) }, 0, 0.0 };
	set.samples.push_back(Sample { 4, 4, 0, 0.5f });
	set.samples.push_back(Sample { 8, 4, 0, 0.5f / 16.0f });
	LmReport rep;
	const std::vector<Transmitter> fit = fit_power_params(set, std::vector<Transmitter> { pos }, AugmentParams {}, &rep);
	EXPECT_EQ(rep.iterations, 0);
	EXPECT_EQ(rep.cost, 0.0);
	EXPECT_EQ(fit[0].gain_const, 0.5);
}

TEST(PowerFit, CoincidentPositionsFallBack)
{
	// duplicate positions make the normal equations singular
	const GridSpec g = grid16();
	std::vector<Transmitter> truth { Transmitter { Vec3 { 6, 6, 1.0 }, 0, 0.06 } };
	const SampleSet samples = dense_free_space(g, truth, 2.0, 3);
	const std::vector<Transmitter> positions { Transmitter { truth[0].pos, 0, 0 }, Transmitter { truth[0].pos, 0, 0 } };
	const std::vector<Transmitter> fit = fit_power_params(samples, positions, AugmentParams {});
	EXPECT_NEAR(fit[0].gain_const + fit[1].gain_const, 0.06, 1e-6);
	EXPECT_GE(fit[0].gain_const, 0.0);
	EXPECT_GE(fit[1].gain_const, 0.0);
	EXPECT_THROW(fit_power_params(SampleSet { {}, g }, positions, AugmentParams {}), InsufficientData);
	EXPECT_THROW(fit_power_params(samples, std::vector<Transmitter> {}, AugmentParams {}), InvalidArgument);
}

TEST(Augment, PassThroughAndFilter)
{
	const Scene s = generate_scene(test::small_scene_config(EnvLabel::urban), 21);
	SampleSet set = draw_samples(s, 20, 4);
	set.samples[0].rss = 0.025f;
	set.samples[0].h = set.samples[0].h == 1 ? 0 : 1;
	if (s.buildings.occupied(set.samples[0].x, set.samples[0].y, set.samples[0].h))
		set.samples[0].h = 2;
	const AugmentParams p;
	for (int h = 0; h < 3; h++)
	{
		const ProjectedSet out = augment::augment(set, context_of(s), h, p);
		ASSERT_EQ(out.entries.size(), set.size());
		EXPECT_EQ(out.target_h, h);
		for (std::size_t i = 0; i < set.size(); i++)
		{
			const ProjectedSample &e = out.entries[i];
			EXPECT_EQ(e.source_index, i);
			EXPECT_EQ(e.x, set.samples[i].x);
			EXPECT_EQ(e.y, set.samples[i].y);
			if (set.samples[i].h == h)
			{
				EXPECT_EQ(e.rss_hat, set.samples[i].rss);
				EXPECT_FALSE(e.dropped);
			}
			else if (set.samples[i].rss < p.theta)
				EXPECT_TRUE(e.dropped);
			if (!e.dropped)
			{
				EXPECT_GE(e.rss_hat, 0.0f);
				EXPECT_LE(e.rss_hat, 1.0f);
			}
			if (!e.dropped && set.samples[i].h != h)
				EXPECT_GE(e.rss_hat, p.theta);
		}
	}
}

TEST(Augment, HataOnlyOwnHeightIsIdentity)
{
	AugmentParams p;
	p.free_space_enabled = false;
	const Scene s = generate_scene(test::small_scene_config(EnvLabel::rural), 2);
	const SampleSet set = draw_samples(s, 12, 1);
	for (const Sample &smp : set.samples)
		EXPECT_EQ(hata_project(smp, s.grid.heights_m[smp.h], s.grid.heights_m[smp.h], s.freq_mhz, s.bounds), double(smp.rss));
	// with free space disabled no transmitters are needed, even for tiny sample sets
	SampleSet few { { set.samples[0] }, set.grid };
	EXPECT_NO_THROW(augment::augment(few, context_of(s), 1, p));
}

TEST(Augment, FreeSpaceWorldMatchesOracle)
{
	const GridSpec g = grid16();
	const Context ctx(g);
	std::vector<Transmitter> txs { Transmitter { Vec3 { 4, 9, 1.2 }, 0, 0.5 }, Transmitter { Vec3 { 12, 2, 0.4 }, 0, 0.3 } };
	SampleSet set;
	set.grid = g;
	std::mt19937_64 rng(9);
	for (int i = 0; i < 30; i++)
	{
		const int x = int(rng() % 16), y = int(rng() % 16), h = int(rng() % 3);
		bool dup = false;
		for (const Sample &s : set.samples)
			dup = dup || (s.x == x && s.y == y && s.h == h);
		if (dup)
			continue;
		set.samples.push_back(Sample { x, y, h, static_cast<float>(free_space_predict(Vec3 { double(x), double(y),
				g.height_cells(h) }, txs, 2.0)) });
	}
	AugmentParams p;
	p.hata_enabled = false;
	p.theta = 0.0;
	for (int h = 0; h < 3; h++)
	{
		const ProjectedSet out = augment_with_transmitters(set, ctx.view(), h, p, txs);
		for (std::size_t i = 0; i < set.size(); i++)
		{
			if (set.samples[i].h == h)
				continue;
			const double oracle = free_space_predict(Vec3 { double(set.samples[i].x), double(set.samples[i].y), g.height_cells(h) },
					txs, 2.0);
			EXPECT_NEAR(out.entries[i].rss_hat, oracle, 1e-6);
		}
	}
}

TEST(Augment, BlendIsConvexCombination)
{
	const GridSpec g = grid16();
	const Context ctx(g);
	const std::vector<Transmitter> txs { Transmitter { Vec3 { 8, 8, 1.0 }, 0, 0.4 } };
	SampleSet set { { Sample { 2, 3, 0, 0.6f }, Sample { 9, 9, 2, 0.7f } }, g };
	AugmentParams p;
	p.theta = 0.0;
	const ProjectedSet out = augment_with_transmitters(set, ctx.view(), 1, p, txs);
	const double w = blend_weight(g.heights_m[1], p.u_scale_m);
	for (std::size_t i = 0; i < 2; i++)
	{
		const Sample &s = set.samples[i];
		const double free = free_space_predict(Vec3 { double(s.x), double(s.y), g.height_cells(1) }, txs, 2.0);
		const double hata = hata_project(s, g.heights_m[1], g.heights_m[s.h], 3500.0, NormBounds {});
		EXPECT_NEAR(out.entries[i].rss_hat, std::clamp((1 - w) * free + w * hata, 0.0, 1.0), 1e-7);
	}
}

TEST(Augment, Errors)
{
	const Scene s = generate_scene(test::small_scene_config(EnvLabel::urban), 2);
	const SampleSet set = draw_samples(s, 10, 1);
	EXPECT_THROW(augment::augment(set, context_of(s), 3, AugmentParams {}), InvalidArgument);
	EXPECT_THROW(augment::augment(SampleSet { {}, s.grid }, context_of(s), 0, AugmentParams {}), InsufficientData);
	const SampleSet three { { set.samples[0], set.samples[1], set.samples[2] }, s.grid };
	AugmentParams p;
	p.hata_enabled = false;
	EXPECT_THROW(augment::augment(three, context_of(s), 0, p), InsufficientData);
}

TEST(Coplanar, DropsOffPlane)
{
	const SampleSet set { { Sample { 1, 1, 0, 0.5f }, Sample { 2, 2, 1, 0.6f }, Sample { 3, 3, 0, 0.01f } }, GridSpec {} };
	const ProjectedSet out = coplanar_only(set, 0);
	ASSERT_EQ(out.entries.size(), 3u);
	EXPECT_FALSE(out.entries[0].dropped);
	EXPECT_EQ(out.entries[0].rss_hat, 0.5f);
	EXPECT_TRUE(out.entries[1].dropped);
	EXPECT_FALSE(out.entries[2].dropped);
	EXPECT_EQ(to_csv(out), "source_index,x,y,rss_hat,dropped\n0,1,1,0.5,0\n1,2,2,0,1\n2,3,3,0.00999999978,0\n");
}
