#include <radiolam/checkpoint.hpp>
#include <radiolam/io.hpp>

#include "support.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <fstream>

using namespace radiolam;
namespace fs = std::filesystem;

namespace
{
	std::string bytes(const fs::path &p)
	{
		return read_text_file(p);
	}

	MoEParams sample_moe()
	{
		MoEParams moe = test::tiny_moe(12);
		moe.schedule = make_schedule(200, 1e-4, 0.02);
		moe.guidance_scale = 1.25;
		moe.meta = TrainingMeta { 77, 30, 200, 3, 0.123456789012345 };
		return moe;
	}
}

TEST(Checkpoint, RoundTripIsBitExact)
{
	const fs::path dir = test::scratch_dir("ckpt_round");
	const MoEParams moe = sample_moe();
	save_checkpoint(moe, dir / "a");
	const MoEParams back = load_checkpoint(dir / "a");
	EXPECT_EQ(back, moe);
	EXPECT_EQ(back.schedule.alpha_bars, moe.schedule.alpha_bars);
	EXPECT_EQ(back.meta.var_threshold, moe.meta.var_threshold);

	save_checkpoint(back, dir / "b");
	for (const char *f : { "checkpoint.json", "shared.rmt", "expert_0.rmt", "expert_3.rmt", "router.rmt" })
		EXPECT_EQ(bytes(dir / "a" / f), bytes(dir / "b" / f)) << f;
}

TEST(Checkpoint, ScheduleFromBetasMatchesConstruction)
{
	const DiffusionSchedule s = make_schedule(200, 1e-4, 0.02);
	EXPECT_EQ(schedule_from_betas(s.betas), s);
	EXPECT_THROW(schedule_from_betas({ 0.1 }), InvalidArgument);
}

TEST(Checkpoint, HeaderDescribesNetworks)
{
	const fs::path dir = test::scratch_dir("ckpt_header");
	save_checkpoint(sample_moe(), dir);
	const nlohmann::json j = nlohmann::json::parse(read_text_file(dir / "checkpoint.json"));
	EXPECT_EQ(j.at("experts").get<int>(), 4);
	EXPECT_EQ(j.at("domain_experts").size(), 4u);
	EXPECT_EQ(j.at("domain_experts")[2].at("domain").get<std::string>(), "urban");
	EXPECT_EQ(j.at("schedule").at("t_max").get<int>(), 200);
	EXPECT_EQ(j.at("guidance_scale").get<double>(), 1.25);
	const Tensor t = read_rmt(dir / j.at("shared").at("file").get<std::string>());
	EXPECT_EQ(t.dims.size(), 1u);
	EXPECT_EQ(t.values.size(), sample_moe().shared.net.params().scalar_count());
}

TEST(Checkpoint, RejectsDamage)
{
	const fs::path dir = test::scratch_dir("ckpt_bad");
	EXPECT_THROW(load_checkpoint(dir / "none"), MissingFile);

	const MoEParams moe = sample_moe();
	save_checkpoint(moe, dir / "hash");
	nlohmann::json j = nlohmann::json::parse(read_text_file(dir / "hash" / "checkpoint.json"));
	j["architecture_hash"] = "0000000000000000";
	write_text_file(dir / "hash" / "checkpoint.json", j.dump());
	EXPECT_THROW(load_checkpoint(dir / "hash"), FormatError);

	save_checkpoint(moe, dir / "fmt");
	j = nlohmann::json::parse(read_text_file(dir / "fmt" / "checkpoint.json"));
	j["format"] = "something-else";
	write_text_file(dir / "fmt" / "checkpoint.json", j.dump());
	EXPECT_THROW(load_checkpoint(dir / "fmt"), FormatError);

	save_checkpoint(moe, dir / "size");
	write_rmt(dir / "size" / "router.rmt", Tensor { { 3 }, { 1, 2, 3 } });
	EXPECT_THROW(load_checkpoint(dir / "size"), DimensionMismatch);

	save_checkpoint(moe, dir / "gone");
	fs::remove(dir / "gone" / "expert_1.rmt");
	EXPECT_THROW(load_checkpoint(dir / "gone"), MissingFile);

	save_checkpoint(moe, dir / "experts");
	j = nlohmann::json::parse(read_text_file(dir / "experts" / "checkpoint.json"));
	j["experts"] = 3;
	write_text_file(dir / "experts" / "checkpoint.json", j.dump());
	EXPECT_THROW(load_checkpoint(dir / "experts"), FormatError);

	write_text_file(dir / "experts" / "checkpoint.json", "{");
	EXPECT_THROW(load_checkpoint(dir / "experts"), FormatError);
}
