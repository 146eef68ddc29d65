#include "ssia/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace ssia {

static_assert(std::endian::native == std::endian::little,
              "checkpoint i/o assumes a little-endian host");

namespace {

template <class T>
void put(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::istream& in, const char* what) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!in) throw std::runtime_error(std::string("checkpoint: truncated reading ") + what);
    return v;
}

void put_floats(std::ostream& out, const std::vector<float>& v) {
    out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * 4));
}

void get_floats(std::istream& in, std::vector<float>& v, const char* what) {
    in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * 4));
    if (!in) throw std::runtime_error(std::string("checkpoint: truncated reading ") + what);
}

}  // namespace

void save_checkpoint(const std::string& path, UNet<float>& net, const Adam<float>* opt,
                     int64_t global_step) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for write: " + path);
    out.write("SSIA", 4);
    put<uint32_t>(out, kCheckpointVersion);
    const ModelConfig& c = net.config();
    const int32_t cfg[8] = {c.input_res, c.stem_ch,  c.block_ch[0],  c.block_ch[1],
                            c.block_ch[2], c.trunk_ch, c.embed_dim, c.force_classes};
    out.write(reinterpret_cast<const char*>(cfg), sizeof cfg);

    auto params = net.params();
    auto buffers = net.norm_buffers();
    put<uint32_t>(out, static_cast<uint32_t>(params.size() + buffers.size()));
    auto write_tensor = [&out](const ParamRef<float>& p) {
        put<uint16_t>(out, static_cast<uint16_t>(p.name.size()));
        out.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
        put<uint8_t>(out, 4);
        const int32_t dims[4] = {p.w->n, p.w->c, p.w->h, p.w->w};
        out.write(reinterpret_cast<const char*>(dims), sizeof dims);
        put_floats(out, p.w->v);
    };
    for (const auto& p : params) write_tensor(p);
    for (const auto& b : buffers) write_tensor(b);

    put<uint8_t>(out, opt && !opt->m.empty() ? 1 : 0);
    if (opt && !opt->m.empty()) {
        put<uint64_t>(out, static_cast<uint64_t>(opt->t));
        for (size_t i = 0; i < params.size(); ++i) {
            put_floats(out, opt->m[i]);
            put_floats(out, opt->v[i]);
        }
    }
    put<uint64_t>(out, static_cast<uint64_t>(global_step));
    if (!out) throw std::runtime_error("write failed: " + path);
}

LoadedModel load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "SSIA", 4) != 0)
        throw std::runtime_error("checkpoint: bad magic in " + path);
    const uint32_t version = get<uint32_t>(in, "version");
    if (version != kCheckpointVersion)
        throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version) +
                                 " in " + path);
    int32_t cfg[8];
    in.read(reinterpret_cast<char*>(cfg), sizeof cfg);
    if (!in) throw std::runtime_error("checkpoint: truncated config in " + path);

    LoadedModel lm;
    lm.cfg.input_res = cfg[0];
    lm.cfg.stem_ch = cfg[1];
    lm.cfg.block_ch = {cfg[2], cfg[3], cfg[4]};
    lm.cfg.trunk_ch = cfg[5];
    lm.cfg.embed_dim = cfg[6];
    lm.cfg.force_classes = cfg[7];
    lm.net = std::make_unique<UNet<float>>(lm.cfg);

    auto params = lm.net->params();
    auto buffers = lm.net->norm_buffers();
    std::vector<ParamRef<float>*> by_order;
    for (auto& p : params) by_order.push_back(&p);
    for (auto& b : buffers) by_order.push_back(&b);

    const uint32_t count = get<uint32_t>(in, "tensor count");
    if (count != by_order.size())
        throw std::runtime_error("checkpoint: tensor count mismatch in " + path);
    for (uint32_t i = 0; i < count; ++i) {
        const uint16_t len = get<uint16_t>(in, "tensor name length");
        std::string name(len, '\0');
        in.read(name.data(), len);
        if (!in) throw std::runtime_error("checkpoint: truncated tensor name in " + path);
        if (name != by_order[i]->name)
            throw std::runtime_error("checkpoint: unexpected tensor '" + name + "' in " + path);
        const uint8_t ndim = get<uint8_t>(in, "ndim");
        if (ndim != 4) throw std::runtime_error("checkpoint: bad tensor rank in " + path);
        int32_t dims[4];
        in.read(reinterpret_cast<char*>(dims), sizeof dims);
        if (!in) throw std::runtime_error("checkpoint: truncated dims in " + path);
        Tensor<float>* t = by_order[i]->w;
        if (dims[0] != t->n || dims[1] != t->c || dims[2] != t->h || dims[3] != t->w)
            throw std::runtime_error("checkpoint: shape mismatch for '" + name + "' in " + path);
        get_floats(in, t->v, name.c_str());
    }

    const uint8_t has_opt = get<uint8_t>(in, "optimizer flag");
    if (has_opt) {
        lm.has_opt = true;
        lm.opt.t = static_cast<int64_t>(get<uint64_t>(in, "adam step"));
        lm.opt.m.resize(params.size());
        lm.opt.v.resize(params.size());
        for (size_t i = 0; i < params.size(); ++i) {
            lm.opt.m[i].assign(params[i].w->numel(), 0.f);
            lm.opt.v[i].assign(params[i].w->numel(), 0.f);
            get_floats(in, lm.opt.m[i], "adam m");
            get_floats(in, lm.opt.v[i], "adam v");
        }
    }
    lm.global_step = static_cast<int64_t>(get<uint64_t>(in, "global step"));
    return lm;
}

}  // namespace ssia
