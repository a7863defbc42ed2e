#include "laneseq/network.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "laneseq/forward_ctx.hpp"
#include "laneseq/rng.hpp"

namespace laneseq {

using detail::PureCtx;
using detail::TapeCtx;

void validate_config(const NetworkConfig& c) {
    auto fail = [](const std::string& m) { throw std::runtime_error("config: " + m); };
    if (c.encoder_channels.empty()) fail("encoder_channels is empty");
    for (uint32_t ch : c.encoder_channels)
        if (ch == 0) fail("encoder channel count 0");
    if (c.convs_per_block.size() != c.encoder_channels.size())
        fail("convs_per_block has " + std::to_string(c.convs_per_block.size()) +
             " entries for " + std::to_string(c.encoder_channels.size()) + " blocks");
    for (uint32_t n : c.convs_per_block)
        if (n == 0) fail("block with 0 convs");
    if (c.bridge_convs == 0) fail("bridge_convs must be >= 1");
    if (c.input_channels == 0) fail("input_channels must be >= 1");
    uint32_t div = 1u << c.pool_blocks();
    if (c.input_h % div || c.input_h / div == 0)
        fail("input height " + std::to_string(c.input_h) + " not divisible by 2^" +
             std::to_string(c.pool_blocks()) + " = " + std::to_string(div));
    if (c.input_w % div || c.input_w / div == 0)
        fail("input width " + std::to_string(c.input_w) + " not divisible by 2^" +
             std::to_string(c.pool_blocks()) + " = " + std::to_string(div));
    if (c.convlstm_kernel % 2 == 0 || c.convlstm_kernel == 0)
        fail("convlstm_kernel " + std::to_string(c.convlstm_kernel) + " is not odd");
    if (c.class_count < 2) fail("class_count must be >= 2");
    if (c.n_frames == 0) fail("n_frames must be >= 1");
    if (c.temporal == Temporal::SingleFrame && c.n_frames != 1)
        fail("single_frame variant requires n_frames = 1");
}

NetworkConfig make_preset(const std::string& preset, Variant variant, Temporal temporal,
                          uint32_t n_frames) {
    NetworkConfig c;
    c.variant = variant;
    c.temporal = temporal;
    c.n_frames = temporal == Temporal::SingleFrame ? 1 : n_frames;
    if (preset == "default") {
        c.input_h = 128;
        c.input_w = 256;
        c.encoder_channels = {64, 128, 256, 512};
        if (variant == Variant::Segnet) {
            c.convs_per_block = {2, 2, 3, 3};
            c.bridge_convs = 3;
        } else {
            c.convs_per_block = {2, 2, 2, 2};
            c.bridge_convs = 2;
        }
    } else if (preset == "tiny") {
        c.input_h = 32;
        c.input_w = 64;
        c.encoder_channels = {8, 16, 16};
        c.convs_per_block = {1, 1, 1};
        c.bridge_convs = 1;
    } else {
        throw std::runtime_error("unknown preset '" + preset + "' (expected default or tiny)");
    }
    validate_config(c);
    return c;
}

std::vector<std::pair<std::string, std::vector<uint32_t>>> parameter_plan(
    const NetworkConfig& c) {
    std::vector<std::pair<std::string, std::vector<uint32_t>>> plan;
    auto conv = [&](const std::string& name, uint32_t out, uint32_t in, uint32_t k) {
        plan.push_back({name + ".w", {out, in, k, k}});
        plan.push_back({name + ".b", {out}});
    };
    // encoder
    uint32_t in_ch = c.input_channels;
    for (size_t b = 0; b < c.encoder_channels.size(); ++b) {
        uint32_t out_ch = c.encoder_channels[b];
        for (uint32_t j = 0; j < c.convs_per_block[b]; ++j) {
            conv("enc.b" + std::to_string(b) + ".conv" + std::to_string(j), out_ch, in_ch, 3);
            in_ch = out_ch;
        }
    }
    for (uint32_t j = 0; j < c.bridge_convs; ++j)
        conv("enc.bridge.conv" + std::to_string(j), in_ch, in_ch, 3);
    // convlstm (hidden = bottleneck channels)
    if (c.temporal == Temporal::ConvLSTM) {
        uint32_t hidden = c.bottleneck_channels();
        uint32_t bh = c.bottleneck_h(), bw = c.bottleneck_w(), k = c.convlstm_kernel;
        for (int layer = 1; layer <= 2; ++layer) {
            std::string p = "lstm" + std::to_string(layer) + ".";
            uint32_t xin = layer == 1 ? c.bottleneck_channels() : hidden;
            for (const char* g : {"i", "f", "c", "o"}) {
                plan.push_back({p + "w_x" + g, {hidden, xin, k, k}});
                plan.push_back({p + "w_h" + g, {hidden, hidden, k, k}});
                if (g[0] != 'c') plan.push_back({p + "w_c" + g, {hidden, bh, bw}});
                plan.push_back({p + "b_" + g, {hidden}});
            }
        }
    }
    // decoder (mirrored stages, deepest first)
    const auto& ch = c.encoder_channels;
    int blocks = int(ch.size());
    uint32_t cur = c.bottleneck_channels();
    for (int b = blocks - 1; b >= 0; --b) {
        uint32_t target = ch[size_t(b)];
        uint32_t stage_in = c.variant == Variant::Unet ? cur + target : cur;
        for (uint32_t j = 0; j < c.convs_per_block[size_t(b)]; ++j) {
            bool last = j + 1 == c.convs_per_block[size_t(b)];
            uint32_t out;
            if (c.variant == Variant::Unet) {
                out = target;
            } else {
                uint32_t next = b > 0 ? ch[size_t(b) - 1] : ch[0];
                out = last ? next : target;
            }
            conv("dec.b" + std::to_string(b) + ".conv" + std::to_string(j), out, stage_in, 3);
            stage_in = out;
        }
        cur = stage_in;
    }
    conv("cls", c.class_count, cur, 1);
    return plan;
}

Model build_model(const NetworkConfig& config, uint64_t seed) {
    validate_config(config);
    Model m;
    m.config = config;
    for (auto& [name, shape] : parameter_plan(config)) {
        Tensor t(shape);
        bool is_kernel = shape.size() == 4;
        if (is_kernel) {
            // fan_in = C*k*k, fan_out = O*k*k
            double kk = double(shape[2]) * shape[3];
            double fan_in = double(shape[1]) * kk, fan_out = double(shape[0]) * kk;
            double s = std::sqrt(6.0 / (fan_in + fan_out));
            SplitMix64 rng = named_stream(seed, name);
            for (auto& v : t.data) v = rng.uniform(-s, s);
        }
        // biases (rank 1) and peepholes (rank 3) stay zero
        m.params.emplace(name, std::move(t));
    }
    return m;
}

// --- forward (pure staged) -----------------------------------------------------

EncoderResult encoder_forward(const Model& model, const Tensor& frame) {
    PureCtx ctx{&model.params};
    auto e = encoder_ctx(ctx, model.config, frame);
    return {std::move(e.skips), std::move(e.pools), std::move(e.bottleneck)};
}

Tensor temporal_forward(const Model& model, const std::vector<Tensor>& bottlenecks) {
    if (bottlenecks.empty()) throw std::runtime_error("temporal_forward: empty sequence");
    if (model.config.temporal == Temporal::SingleFrame) return bottlenecks.back();
    PureCtx ctx{&model.params};
    auto l1 = detail::cell_refs(ctx, "lstm1.", model.config.peephole_current_cell);
    auto l2 = detail::cell_refs(ctx, "lstm2.", model.config.peephole_current_cell);
    return stack_forward_ctx(ctx, l1, l2, bottlenecks);
}

Tensor decoder_forward(const Model& model, const Tensor& hidden, const EncoderResult& enc) {
    PureCtx ctx{&model.params};
    detail::EncOutT<PureCtx> e;
    e.skips = enc.skips;
    e.pools = enc.pools;
    e.bottleneck = enc.bottleneck;
    return decoder_ctx(ctx, model.config, hidden, e);
}

Tensor model_forward_logits(const Model& model, const std::vector<Tensor>& frames) {
    PureCtx ctx{&model.params};
    return model_forward_ctx(ctx, model.config, frames);
}

Tensor model_forward(const Model& model, const std::vector<Tensor>& frames) {
    return softmax_channel(model_forward_logits(model, frames));
}

int model_forward_tape(const Model& model, const std::vector<Tensor>& frames, Tape& tape,
                       std::map<std::string, int>& param_ids) {
    for (const auto& [name, tensor] : model.params) param_ids[name] = tape.input(tensor);
    std::vector<int> frame_ids;
    frame_ids.reserve(frames.size());
    for (const Tensor& f : frames) frame_ids.push_back(tape.input(f));
    TapeCtx ctx{&tape, &param_ids};
    return model_forward_ctx(ctx, model.config, frame_ids);
}

// --- archive ---------------------------------------------------------------------

static std::string variant_str(Variant v) { return v == Variant::Unet ? "unet" : "segnet"; }
static std::string temporal_str(Temporal t) {
    return t == Temporal::ConvLSTM ? "convlstm" : "single_frame";
}

static std::string config_blob(const NetworkConfig& c) {
    std::ostringstream os;
    os << "variant=" << variant_str(c.variant) << "\n";
    os << "temporal=" << temporal_str(c.temporal) << "\n";
    os << "input_channels=" << c.input_channels << "\n";
    os << "input_h=" << c.input_h << "\n";
    os << "input_w=" << c.input_w << "\n";
    os << "encoder_channels=";
    for (size_t i = 0; i < c.encoder_channels.size(); ++i)
        os << (i ? "," : "") << c.encoder_channels[i];
    os << "\n";
    os << "convs_per_block=";
    for (size_t i = 0; i < c.convs_per_block.size(); ++i)
        os << (i ? "," : "") << c.convs_per_block[i];
    os << "\n";
    os << "bridge_convs=" << c.bridge_convs << "\n";
    os << "n_frames=" << c.n_frames << "\n";
    os << "convlstm_kernel=" << c.convlstm_kernel << "\n";
    os << "class_count=" << c.class_count << "\n";
    os << "peephole_current_cell=" << (c.peephole_current_cell ? 1 : 0) << "\n";
    return os.str();
}

static std::vector<uint32_t> parse_u32_list(const std::string& s) {
    std::vector<uint32_t> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(uint32_t(std::stoul(item)));
    return out;
}

static NetworkConfig parse_config_blob(const std::string& blob, const std::string& where) {
    NetworkConfig c;
    std::istringstream is(blob);
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("load_model: bad config line '" + line + "' in " + where);
        std::string key = line.substr(0, eq), val = line.substr(eq + 1);
        if (key == "variant") {
            if (val != "unet" && val != "segnet")
                throw std::runtime_error("load_model: unknown variant '" + val + "' in " + where);
            c.variant = val == "unet" ? Variant::Unet : Variant::Segnet;
        } else if (key == "temporal") {
            if (val != "convlstm" && val != "single_frame")
                throw std::runtime_error("load_model: unknown temporal '" + val + "' in " + where);
            c.temporal = val == "convlstm" ? Temporal::ConvLSTM : Temporal::SingleFrame;
        } else if (key == "input_channels") c.input_channels = uint32_t(std::stoul(val));
        else if (key == "input_h") c.input_h = uint32_t(std::stoul(val));
        else if (key == "input_w") c.input_w = uint32_t(std::stoul(val));
        else if (key == "encoder_channels") c.encoder_channels = parse_u32_list(val);
        else if (key == "convs_per_block") c.convs_per_block = parse_u32_list(val);
        else if (key == "bridge_convs") c.bridge_convs = uint32_t(std::stoul(val));
        else if (key == "n_frames") c.n_frames = uint32_t(std::stoul(val));
        else if (key == "convlstm_kernel") c.convlstm_kernel = uint32_t(std::stoul(val));
        else if (key == "class_count") c.class_count = uint32_t(std::stoul(val));
        else if (key == "peephole_current_cell") c.peephole_current_cell = val == "1";
        else throw std::runtime_error("load_model: unknown config key '" + key + "' in " + where);
    }
    return c;
}

void save_model(const Model& model, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("save_model: cannot open " + path);
    f.write("LSMODEL1", 8);
    std::string blob = config_blob(model.config);
    uint32_t len = uint32_t(blob.size());
    unsigned char lb[4] = {static_cast<unsigned char>(len), static_cast<unsigned char>(len >> 8),
                           static_cast<unsigned char>(len >> 16),
                           static_cast<unsigned char>(len >> 24)};
    f.write(reinterpret_cast<const char*>(lb), 4);
    f.write(blob.data(), std::streamsize(blob.size()));
    for (const auto& [name, tensor] : model.params) {
        if (name.size() > 0xFFFF) throw std::runtime_error("save_model: parameter name too long");
        uint16_t n = uint16_t(name.size());
        unsigned char nb[2] = {static_cast<unsigned char>(n), static_cast<unsigned char>(n >> 8)};
        f.write(reinterpret_cast<const char*>(nb), 2);
        f.write(name.data(), n);
        write_tensor(f, tensor);
    }
    if (!f) throw std::runtime_error("save_model: write failed for " + path);
}

Model load_model(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("load_model: cannot open " + path);
    char magic[8];
    f.read(magic, 8);
    if (f.gcount() != 8 || std::string(magic, 8) != "LSMODEL1")
        throw std::runtime_error("load_model: corrupted magic in " + path);
    unsigned char lb[4];
    f.read(reinterpret_cast<char*>(lb), 4);
    if (f.gcount() != 4) throw std::runtime_error("load_model: truncated header in " + path);
    uint32_t len = uint32_t(lb[0]) | uint32_t(lb[1]) << 8 | uint32_t(lb[2]) << 16 |
                   uint32_t(lb[3]) << 24;
    std::string blob(len, '\0');
    f.read(blob.data(), len);
    if (uint32_t(f.gcount()) != len)
        throw std::runtime_error("load_model: truncated config blob in " + path);
    Model m;
    m.config = parse_config_blob(blob, path);
    validate_config(m.config);
    while (true) {
        unsigned char nb[2];
        f.read(reinterpret_cast<char*>(nb), 2);
        if (f.gcount() == 0) break;  // clean EOF
        if (f.gcount() != 2) throw std::runtime_error("load_model: truncated entry in " + path);
        uint16_t n = uint16_t(nb[0]) | uint16_t(uint16_t(nb[1]) << 8);
        std::string name(n, '\0');
        f.read(name.data(), n);
        if (f.gcount() != n) throw std::runtime_error("load_model: truncated name in " + path);
        m.params[name] = read_tensor(f, path);
    }
    // completeness + shape check against the plan
    auto plan = parameter_plan(m.config);
    if (plan.size() != m.params.size())
        throw std::runtime_error("load_model: " + path + " holds " +
                                 std::to_string(m.params.size()) + " parameters, config needs " +
                                 std::to_string(plan.size()));
    for (auto& [name, shape] : plan) {
        auto it = m.params.find(name);
        if (it == m.params.end())
            throw std::runtime_error("load_model: missing parameter " + name + " in " + path);
        if (it->second.shape != shape)
            throw std::runtime_error("load_model: parameter " + name + " has shape " +
                                     shape_str(it->second.shape) + ", config needs " +
                                     shape_str(shape));
    }
    return m;
}

Model load_model_expecting(const std::string& path, const NetworkConfig& expected) {
    Model m = load_model(path);
    if (config_blob(m.config) != config_blob(expected))
        throw std::runtime_error("load_model: config in " + path +
                                 " does not match the expected configuration");
    return m;
}

}  // namespace laneseq
