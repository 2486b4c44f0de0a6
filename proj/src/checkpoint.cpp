#include <radiolam/checkpoint.hpp>
#include <radiolam/io.hpp>

#include <json.hpp>

#include <iomanip>
#include <sstream>

namespace radiolam
{
	namespace fs = std::filesystem;
	using nlohmann::json;

	DiffusionSchedule schedule_from_betas(const std::vector<double> &betas)
	{
		if (betas.size() < 2)
			throw InvalidArgument("schedule needs at least 2 betas");
		DiffusionSchedule s;
		s.t_max = static_cast<int>(betas.size());
		double prod = 1.0;
		for (double b : betas)
		{
			if (!(b > 0.0 && b < 1.0))
				throw InvalidArgument("schedule betas must lie in (0, 1)");
			s.betas.push_back(b);
			s.alphas.push_back(1.0 - b);
			prod *= 1.0 - b;
			s.alpha_bars.push_back(prod);
		}
		return s;
	}

	namespace
	{
		constexpr const char *kFormat = "radiolam-checkpoint-v1";

		std::string hex(std::uint64_t v)
		{
			std::ostringstream os;
			os << std::hex << std::setw(16) << std::setfill('0') << v;
			return os.str();
		}

		json write_network(const nn::ParamSet &params, const fs::path &dir, const std::string &file)
		{
			Tensor t;
			t.dims = { static_cast<std::uint32_t>(params.scalar_count()) };
			json shapes = json::array();
			for (std::size_t i = 0; i < params.size(); i++)
			{
				const nn::Mat &m = params[i];
				t.values.insert(t.values.end(), m.data(), m.data() + m.size());
				shapes.push_back(json { { "name", params.name(i) }, { "rows", m.rows() }, { "cols", m.cols() } });
			}
			write_rmt(dir / file, t);
			return json { { "file", file }, { "tensors", shapes } };
		}

		void read_network(nn::ParamSet &params, const fs::path &dir, const json &j)
		{
			const json &shapes = j.at("tensors");
			if (shapes.size() != params.size())
				throw FormatError("checkpoint network has an unexpected tensor count");
			const Tensor t = read_rmt(dir / j.at("file").get<std::string>());
			if (t.dims.size() != 1 || t.values.size() != params.scalar_count())
				throw DimensionMismatch("checkpoint tensor size does not match the architecture");
			std::size_t offset = 0;
			for (std::size_t i = 0; i < params.size(); i++)
			{
				nn::Mat &m = params[i];
				if (shapes[i].at("name").get<std::string>() != params.name(i) || shapes[i].at("rows").get<long>() != m.rows()
						|| shapes[i].at("cols").get<long>() != m.cols())
					throw DimensionMismatch("checkpoint tensor " + params.name(i) + " has an unexpected shape");
				std::copy(t.values.begin() + static_cast<long>(offset), t.values.begin() + static_cast<long>(offset + m.size()), m.data());
				offset += static_cast<std::size_t>(m.size());
			}
		}

		json arch_json(const DenoiserArch &a)
		{
			return json { { "channels", a.channels }, { "time_dim", a.time_dim }, { "dilation1", a.dilation1 }, { "dilation2", a.dilation2 } };
		}
	}

	void save_checkpoint(const MoEParams &moe, const fs::path &dir)
	{
		moe.validate();
		fs::create_directories(dir);
		json j;
		j["format"] = kFormat;
		j["architecture_hash"] = hex(moe.architecture_hash());
		j["denoiser"] = arch_json(moe.shared.net.arch());
		j["router"] = json { { "hidden", moe.router.arch().hidden }, { "experts", moe.router.arch().experts } };
		j["schedule"] = json { { "t_max", moe.schedule.t_max }, { "betas", moe.schedule.betas } };
		j["experts"] = moe.domain_experts.size();
		j["guidance_scale"] = moe.guidance_scale;
		j["meta"] = json { { "seed", moe.meta.seed }, { "expert_epochs", moe.meta.expert_epochs }, { "router_epochs",
				moe.meta.router_epochs }, { "finetune_epochs", moe.meta.finetune_epochs }, { "var_threshold", moe.meta.var_threshold } };

		json shared = write_network(moe.shared.net.params(), dir, "shared.rmt");
		shared["domain"] = moe.shared.domain;
		shared["expert_id"] = moe.shared.expert_id;
		j["shared"] = shared;
		json domains = json::array();
		for (std::size_t e = 0; e < moe.domain_experts.size(); e++)
		{
			json d = write_network(moe.domain_experts[e].net.params(), dir, "expert_" + std::to_string(e) + ".rmt");
			d["domain"] = moe.domain_experts[e].domain;
			d["expert_id"] = moe.domain_experts[e].expert_id;
			domains.push_back(d);
		}
		j["domain_experts"] = domains;
		j["router_params"] = write_network(moe.router.params(), dir, "router.rmt");
		write_text_file(dir / "checkpoint.json", j.dump(2) + "\n");
	}

	MoEParams load_checkpoint(const fs::path &dir)
	{
		const fs::path header = dir / "checkpoint.json";
		if (!fs::exists(header))
			throw MissingFile("missing checkpoint header: " + header.string());
		MoEParams moe;
		try
		{
			const json j = json::parse(read_text_file(header));
			if (j.at("format").get<std::string>() != kFormat)
				throw FormatError("unsupported checkpoint format");
			DenoiserArch arch;
			arch.channels = j.at("denoiser").at("channels").get<int>();
			arch.time_dim = j.at("denoiser").at("time_dim").get<int>();
			arch.dilation1 = j.at("denoiser").at("dilation1").get<int>();
			arch.dilation2 = j.at("denoiser").at("dilation2").get<int>();
			RouterArch rarch;
			rarch.hidden = j.at("router").at("hidden").get<int>();
			rarch.experts = j.at("router").at("experts").get<int>();
			if (j.at("experts").get<int>() != rarch.experts)
				throw FormatError("checkpoint expert count disagrees with the router width");

			moe.schedule = schedule_from_betas(j.at("schedule").at("betas").get<std::vector<double>>());
			if (moe.schedule.t_max != j.at("schedule").at("t_max").get<int>())
				throw FormatError("checkpoint schedule length mismatch");
			moe.guidance_scale = j.at("guidance_scale").get<double>();
			const json &meta = j.at("meta");
			moe.meta.seed = meta.at("seed").get<std::uint64_t>();
			moe.meta.expert_epochs = meta.at("expert_epochs").get<int>();
			moe.meta.router_epochs = meta.at("router_epochs").get<int>();
			moe.meta.finetune_epochs = meta.at("finetune_epochs").get<int>();
			moe.meta.var_threshold = meta.at("var_threshold").get<double>();

			moe.shared.net = Denoiser(arch);
			moe.shared.domain = j.at("shared").at("domain").get<std::string>();
			moe.shared.expert_id = j.at("shared").at("expert_id").get<int>();
			read_network(moe.shared.net.params(), dir, j.at("shared"));
			for (const json &d : j.at("domain_experts"))
			{
				ExpertParams e;
				e.net = Denoiser(arch);
				e.domain = d.at("domain").get<std::string>();
				e.expert_id = d.at("expert_id").get<int>();
				read_network(e.net.params(), dir, d);
				moe.domain_experts.push_back(std::move(e));
			}
			moe.router = Router(rarch);
			read_network(moe.router.params(), dir, j.at("router_params"));
			moe.validate();
			if (hex(moe.architecture_hash()) != j.at("architecture_hash").get<std::string>())
				throw FormatError("checkpoint architecture hash mismatch");
		} catch (const json::exception &e)
		{
			throw FormatError("malformed checkpoint header: " + std::string(e.what()));
		} catch (const InvalidArgument &e)
		{
			throw FormatError("invalid checkpoint: " + std::string(e.what()));
		}
		return moe;
	}
}
