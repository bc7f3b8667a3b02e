#include "dpdforge/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "dpdforge/rng.hpp"

namespace dpdforge {

namespace fs = std::filesystem;

nlohmann::json ofdm_config_to_json(const OfdmConfig& cfg) {
    return {{"num_channels", cfg.num_channels},
            {"channel_bw_hz", cfg.channel_bw_hz},
            {"subcarriers_per_channel", cfg.subcarriers_per_channel},
            {"qam_order", cfg.qam_order},
            {"sample_rate_hz", cfg.sample_rate_hz},
            {"num_symbols", cfg.num_symbols},
            {"cyclic_prefix_len", cfg.cyclic_prefix_len},
            {"window_len", cfg.window_len},
            {"seed", cfg.seed}};
}

OfdmConfig ofdm_config_from_json(const nlohmann::json& j) {
    OfdmConfig cfg;
    cfg.num_channels = j.at("num_channels").get<int>();
    cfg.channel_bw_hz = j.at("channel_bw_hz").get<double>();
    cfg.subcarriers_per_channel = j.at("subcarriers_per_channel").get<int>();
    cfg.qam_order = j.at("qam_order").get<int>();
    cfg.sample_rate_hz = j.at("sample_rate_hz").get<double>();
    cfg.num_symbols = j.at("num_symbols").get<int>();
    cfg.cyclic_prefix_len = j.at("cyclic_prefix_len").get<int>();
    cfg.window_len = j.at("window_len").get<int>();
    cfg.seed = j.at("seed").get<std::uint64_t>();
    return cfg;
}

nlohmann::json synth_pa_to_json(const SynthPaConfig& cfg) {
    nlohmann::json coeffs = nlohmann::json::array();
    for (const std::complex<double>& c : cfg.coefficients)
        coeffs.push_back({c.real(), c.imag()});
    nlohmann::json j{{"memory_depth", cfg.memory_depth},
                     {"nonlinearity_order", cfg.nonlinearity_order},
                     {"coefficients", coeffs},
                     {"seed", cfg.seed}};
    j["saturation_level"] =
        cfg.saturation_level ? nlohmann::json(*cfg.saturation_level) : nlohmann::json(nullptr);
    j["amplitude_quantization_bits"] = cfg.amplitude_quantization_bits
                                           ? nlohmann::json(*cfg.amplitude_quantization_bits)
                                           : nlohmann::json(nullptr);
    return j;
}

SynthPaConfig synth_pa_from_json(const nlohmann::json& j) {
    SynthPaConfig cfg;
    cfg.memory_depth = j.at("memory_depth").get<int>();
    cfg.nonlinearity_order = j.at("nonlinearity_order").get<int>();
    cfg.coefficients.clear();
    for (const auto& pair : j.at("coefficients"))
        cfg.coefficients.emplace_back(pair.at(0).get<double>(), pair.at(1).get<double>());
    if (!j.at("saturation_level").is_null())
        cfg.saturation_level = j.at("saturation_level").get<double>();
    if (!j.at("amplitude_quantization_bits").is_null())
        cfg.amplitude_quantization_bits = j.at("amplitude_quantization_bits").get<int>();
    cfg.seed = j.at("seed").get<std::uint64_t>();
    return cfg;
}

namespace {

void write_reference_csv(const fs::path& path, const OfdmReference& ref) {
    std::FILE* f = std::fopen(path.string().c_str(), "w");
    if (f == nullptr) throw std::runtime_error("cannot open for writing: " + path.string());
    std::fputs("symbol,channel,subcarrier,I,Q\n", f);
    for (int s = 0; s < ref.num_symbols; ++s)
        for (int c = 0; c < ref.cfg.num_channels; ++c)
            for (int k = 0; k < ref.cfg.data_subcarriers_per_channel(); ++k) {
                const IqSample& p = ref.at(s, c, k);
                std::fprintf(f, "%d,%d,%d,%.17g,%.17g\n", s, c, k, p.i, p.q);
            }
    std::fclose(f);
}

OfdmReference read_reference_csv(const fs::path& path, const OfdmConfig& cfg, double scale) {
    std::ifstream in(path);
    if (!in.is_open()) throw std::runtime_error("cannot open: " + path.string());
    std::string line;
    if (!std::getline(in, line) || line.rfind("symbol,channel,subcarrier,I,Q", 0) != 0)
        throw std::runtime_error("bad reference header in " + path.string());
    OfdmReference ref;
    ref.cfg = cfg;
    ref.num_symbols = cfg.num_symbols;
    ref.scale = scale;
    ref.points.assign(static_cast<std::size_t>(cfg.num_symbols) * cfg.data_bins_per_symbol(),
                      IqSample{});
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        int s = 0, c = 0, k = 0;
        double i = 0.0, q = 0.0;
        if (std::sscanf(line.c_str(), "%d,%d,%d,%lf,%lf", &s, &c, &k, &i, &q) != 5)
            throw std::runtime_error("bad reference row in " + path.string());
        ref.at(s, c, k) = {i, q};
    }
    return ref;
}

}  // namespace

Dataset datagen(const DatagenConfig& cfg, const fs::path& out_dir) {
    if (cfg.n_samples < 3) throw std::invalid_argument("datagen: n_samples too small");

    OfdmConfig ofdm = cfg.ofdm;
    if (ofdm.num_symbols <= 0) {
        const std::size_t hop = static_cast<std::size_t>(ofdm.symbol_hop());
        ofdm.num_symbols = static_cast<int>((cfg.n_samples + hop - 1) / hop);
    }
    ofdm.validate();

    auto [x_full, ref] = generate_ofdm(ofdm);
    if (x_full.size() < cfg.n_samples)
        throw std::invalid_argument("datagen: num_symbols too small for n_samples");
    IqSequence x;
    x.sample_rate_hz = x_full.sample_rate_hz;
    x.samples.assign(x_full.samples.begin(),
                     x_full.samples.begin() + static_cast<std::ptrdiff_t>(cfg.n_samples));

    IqSequence y = synth_pa_forward(cfg.pa, x);
    if (cfg.snr_db) y = add_awgn(y, *cfg.snr_db, mix_seed(cfg.pa.seed, 0xF00D));

    Dataset ds;
    ds.split = split_dataset(x, y, cfg.ratios);
    ds.reference = ref;
    ds.meta.sample_rate_hz = ofdm.sample_rate_hz;
    ds.meta.n_samples = cfg.n_samples;
    ds.meta.ratios = cfg.ratios;
    ds.meta.ofdm = ofdm;
    ds.meta.ofdm_scale = ref.scale;
    ds.meta.pa = cfg.pa;
    ds.meta.snr_db = cfg.snr_db;

    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (!fs::is_directory(out_dir))
        throw std::runtime_error("datagen: cannot create output directory " + out_dir.string());

    write_iq_csv(out_dir / "train_input.csv", ds.split.train.input.samples);
    write_iq_csv(out_dir / "train_output.csv", ds.split.train.output.samples);
    write_iq_csv(out_dir / "val_input.csv", ds.split.validation.input.samples);
    write_iq_csv(out_dir / "val_output.csv", ds.split.validation.output.samples);
    write_iq_csv(out_dir / "test_input.csv", ds.split.test.input.samples);
    write_iq_csv(out_dir / "test_output.csv", ds.split.test.output.samples);
    write_reference_csv(out_dir / "reference.csv", *ds.reference);

    nlohmann::json meta{{"format_version", 1},
                        {"sample_rate_hz", ds.meta.sample_rate_hz},
                        {"n_samples", ds.meta.n_samples},
                        {"ratios", ds.meta.ratios},
                        {"ofdm", ofdm_config_to_json(ofdm)},
                        {"ofdm_scale", ds.meta.ofdm_scale},
                        {"synth_pa", synth_pa_to_json(cfg.pa)}};
    meta["snr_db"] = cfg.snr_db ? nlohmann::json(*cfg.snr_db) : nlohmann::json(nullptr);
    std::ofstream mf(out_dir / "meta.json");
    if (!mf.is_open()) throw std::runtime_error("datagen: cannot write meta.json");
    mf << meta.dump(2) << "\n";
    return ds;
}

Dataset load_dataset(const fs::path& dir) {
    std::ifstream mf(dir / "meta.json");
    if (!mf.is_open()) throw std::runtime_error("load_dataset: missing meta.json in " + dir.string());
    nlohmann::json meta = nlohmann::json::parse(mf);

    Dataset ds;
    ds.meta.sample_rate_hz = meta.at("sample_rate_hz").get<double>();
    ds.meta.n_samples = meta.at("n_samples").get<std::size_t>();
    ds.meta.ratios = meta.at("ratios").get<std::array<double, 3>>();
    ds.meta.ofdm = ofdm_config_from_json(meta.at("ofdm"));
    ds.meta.ofdm_scale = meta.at("ofdm_scale").get<double>();
    ds.meta.pa = synth_pa_from_json(meta.at("synth_pa"));
    if (!meta.at("snr_db").is_null()) ds.meta.snr_db = meta.at("snr_db").get<double>();

    const double fs_hz = ds.meta.sample_rate_hz;
    auto load_pair = [&](const char* in_name, const char* out_name, std::size_t offset) {
        SequencePair p;
        p.input.samples = read_iq_csv(dir / in_name);
        p.output.samples = read_iq_csv(dir / out_name);
        p.input.sample_rate_hz = fs_hz;
        p.output.sample_rate_hz = fs_hz;
        p.offset = offset;
        if (p.input.size() != p.output.size())
            throw std::runtime_error("load_dataset: partition length mismatch");
        return p;
    };
    ds.split.train = load_pair("train_input.csv", "train_output.csv", 0);
    ds.split.validation = load_pair("val_input.csv", "val_output.csv", ds.split.train.input.size());
    ds.split.test = load_pair("test_input.csv", "test_output.csv",
                              ds.split.train.input.size() + ds.split.validation.input.size());
    ds.reference = read_reference_csv(dir / "reference.csv", ds.meta.ofdm, ds.meta.ofdm_scale);
    return ds;
}

}  // namespace dpdforge
