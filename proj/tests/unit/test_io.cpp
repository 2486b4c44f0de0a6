#include <radiolam/io.hpp>

#include "support.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

using namespace radiolam;
namespace fs = std::filesystem;

namespace
{
	std::vector<unsigned char> bytes_of(const fs::path &p)
	{
		std::ifstream in(p, std::ios::binary);
		return std::vector<unsigned char>(std::istreambuf_iterator<char>(in), {});
	}

	void write_bytes(const fs::path &p, const std::vector<unsigned char> &b)
	{
		std::ofstream out(p, std::ios::binary | std::ios::trunc);
		out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
	}

	// Independent decoder for the P5 header written by write_pgm.
	std::vector<unsigned char> pgm_pixels(const fs::path &p, int &width, int &height)
	{
		std::ifstream in(p, std::ios::binary);
		std::string magic;
		int maxval = 0;
		in >> magic >> width >> height >> maxval;
		in.get();
		EXPECT_EQ(magic, "P5");
		EXPECT_EQ(maxval, 255);
		std::vector<unsigned char> px(static_cast<std::size_t>(width * height));
		in.read(reinterpret_cast<char*>(px.data()), static_cast<std::streamsize>(px.size()));
		return px;
	}
}

TEST(Rmt, HeaderLayout)
{
	const fs::path dir = test::scratch_dir("rmt_layout");
	Tensor t { { 2, 3 }, { 1, 2, 3, 4, 5, 6 } };
	write_rmt(dir / "a.rmt", t);
	const std::vector<unsigned char> b = bytes_of(dir / "a.rmt");
	ASSERT_EQ(b.size(), 4u + 4u + 8u + 24u);
	EXPECT_EQ(std::string(b.begin(), b.begin() + 4), "RMT1");
	std::uint32_t rank = 0, d0 = 0, d1 = 0;
	std::memcpy(&rank, &b[4], 4);
	std::memcpy(&d0, &b[8], 4);
	std::memcpy(&d1, &b[12], 4);
	EXPECT_EQ(rank, 2u);
	EXPECT_EQ(d0, 2u);
	EXPECT_EQ(d1, 3u);
	float last = 0.0f;
	std::memcpy(&last, &b[36], 4);
	EXPECT_EQ(last, 6.0f);
}

TEST(Rmt, RoundTripIsBitExact)
{
	const fs::path dir = test::scratch_dir("rmt_round");
	Tensor t { { 3, 2, 2 }, {} };
	t.values = { 0.0f, -0.0f, 1.0f / 3.0f, std::numeric_limits<float>::denorm_min(), std::numeric_limits<float>::max(),
			-std::numeric_limits<float>::infinity(), 1e-30f, 0.1f, 0.7f, 123456.789f, -2.5f, 1.0f };
	write_rmt(dir / "t.rmt", t);
	const Tensor back = read_rmt(dir / "t.rmt");
	EXPECT_EQ(back.dims, t.dims);
	ASSERT_EQ(back.values.size(), t.values.size());
	EXPECT_EQ(std::memcmp(back.values.data(), t.values.data(), t.values.size() * sizeof(float)), 0);

	const Map2D m = test::random_map(7, 5, 9);
	write_map(dir / "m.rmt", m);
	EXPECT_EQ(read_map(dir / "m.rmt"), m);
	write_map(dir / "m2.rmt", read_map(dir / "m.rmt"));
	EXPECT_EQ(bytes_of(dir / "m.rmt"), bytes_of(dir / "m2.rmt"));
}

TEST(Rmt, RejectsDamage)
{
	const fs::path dir = test::scratch_dir("rmt_bad");
	EXPECT_THROW(read_rmt(dir / "none.rmt"), MissingFile);
	write_map(dir / "m.rmt", test::random_map(4, 4, 1));
	std::vector<unsigned char> b = bytes_of(dir / "m.rmt");

	std::vector<unsigned char> bad = b;
	bad[0] = 'X';
	write_bytes(dir / "magic.rmt", bad);
	EXPECT_THROW(read_rmt(dir / "magic.rmt"), FormatError);

	bad = b;
	bad.resize(b.size() - 4);
	write_bytes(dir / "short.rmt", bad);
	EXPECT_THROW(read_rmt(dir / "short.rmt"), DimensionMismatch);

	bad = std::vector<unsigned char>(b.begin(), b.begin() + 10);
	write_bytes(dir / "header.rmt", bad);
	EXPECT_THROW(read_rmt(dir / "header.rmt"), FormatError);

	write_rmt(dir / "r3.rmt", Tensor { { 2, 2, 1 }, { 1, 2, 3, 4 } });
	EXPECT_THROW(read_map(dir / "r3.rmt"), DimensionMismatch);
	EXPECT_THROW(write_rmt(dir / "x.rmt", Tensor { { 2, 2 }, { 1 } }), InvalidArgument);
}

TEST(Manifest, RoundTripIsExact)
{
	const fs::path dir = test::scratch_dir("manifest");
	const Scene s = generate_scene(test::small_scene_config(EnvLabel::urban), 77);
	save_scene(s, dir / "scene" / "manifest.json");
	const Scene back = load_scene(dir / "scene" / "manifest.json");
	EXPECT_EQ(back, s);

	save_scene(back, dir / "again" / "manifest.json");
	for (const char *f : { "manifest.json", "buildings.rmt", "terrain.rmt", "truth_h0.rmt", "truth_h2.rmt" })
		EXPECT_EQ(bytes_of(dir / "scene" / f), bytes_of(dir / "again" / f)) << f;
}

TEST(Manifest, EstimationViewNeverReadsTransmitters)
{
	const fs::path dir = test::scratch_dir("manifest_hidden");
	const Scene s = generate_scene(test::small_scene_config(EnvLabel::suburban), 3);
	save_scene(s, dir / "manifest.json");
	nlohmann::json j = nlohmann::json::parse(read_text_file(dir / "manifest.json"));
	EXPECT_TRUE(j.at("transmitters").at("hidden").get<bool>());
	j["transmitters"]["list"] = "garbage";
	write_text_file(dir / "manifest.json", j.dump());

	const Scene est = load_scene_for_estimation(dir / "manifest.json");
	EXPECT_TRUE(est.transmitters.empty());
	EXPECT_EQ(est.buildings, s.buildings);
	EXPECT_EQ(est.truth_maps, s.truth_maps);
	EXPECT_THROW(load_scene(dir / "manifest.json"), FormatError);
}

TEST(Manifest, Errors)
{
	const fs::path dir = test::scratch_dir("manifest_err");
	EXPECT_THROW(load_scene(dir / "nope.json"), MissingFile);
	write_text_file(dir / "bad.json", "{ not json");
	EXPECT_THROW(load_scene(dir / "bad.json"), FormatError);

	const Scene s = generate_scene(test::small_scene_config(EnvLabel::rural), 3);
	save_scene(s, dir / "ok" / "manifest.json");
	write_map(dir / "ok" / "terrain.rmt", Map2D(8, 8));
	EXPECT_THROW(load_scene(dir / "ok" / "manifest.json"), DimensionMismatch);
}

TEST(SamplesCsv, RoundTrip)
{
	const fs::path dir = test::scratch_dir("samples");
	const Scene s = generate_scene(test::small_scene_config(EnvLabel::urban), 4);
	const SampleSet set = draw_samples(s, 30, 8);
	write_samples_csv(dir / "s.csv", set);
	EXPECT_EQ(read_text_file(dir / "s.csv").substr(0, 10), "x,y,h,rss\n");
	EXPECT_EQ(read_samples_csv(dir / "s.csv", s.grid), set);
}

TEST(SamplesCsv, Rejects)
{
	const fs::path dir = test::scratch_dir("samples_bad");
	const GridSpec g;
	write_text_file(dir / "a.csv", "a,b,c\n1,2,0,0.5\n");
	EXPECT_THROW(read_samples_csv(dir / "a.csv", g), FormatError);
	write_text_file(dir / "b.csv", "x,y,h,rss\n1;2;0;0.5\n");
	EXPECT_THROW(read_samples_csv(dir / "b.csv", g), FormatError);
	write_text_file(dir / "c.csv", "x,y,h,rss\n1,2,9,0.5\n");
	EXPECT_THROW(read_samples_csv(dir / "c.csv", g), FormatError);
	write_text_file(dir / "d.csv", "x,y,h,rss\n1,2,0,0.5\n1,2,0,0.25\n");
	EXPECT_THROW(read_samples_csv(dir / "d.csv", g), FormatError);
}

TEST(Pgm, ExtremesAndRandomValues)
{
	const fs::path dir = test::scratch_dir("pgm");
	int w = 0, h = 0;
	write_pgm(dir / "zero.pgm", Map2D(6, 4, 0.0f));
	for (unsigned char p : pgm_pixels(dir / "zero.pgm", w, h))
		EXPECT_EQ(p, 0);
	EXPECT_EQ(w, 4);
	EXPECT_EQ(h, 6);
	write_pgm(dir / "one.pgm", Map2D(6, 4, 1.0f));
	for (unsigned char p : pgm_pixels(dir / "one.pgm", w, h))
		EXPECT_EQ(p, 255);

	Map2D m = test::random_map(9, 11, 3);
	m.at(0, 0) = -0.5f;
	m.at(1, 1) = 1.5f;
	write_pgm(dir / "r.pgm", m);
	const std::vector<unsigned char> px = pgm_pixels(dir / "r.pgm", w, h);
	ASSERT_EQ(px.size(), m.size());
	for (int x = 0; x < 9; x++)
		for (int y = 0; y < 11; y++)
		{
			const double v = std::fmin(1.0, std::fmax(0.0, m.at(x, y)));
			EXPECT_EQ(px[static_cast<std::size_t>(x * 11 + y)], static_cast<int>(std::lround(255.0 * v)));
		}
}
