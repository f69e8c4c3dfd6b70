#include "citeqa/dense.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <unordered_set>

#include "citeqa/parallel.hpp"

namespace citeqa {

namespace {

constexpr char kMagic[4] = {'C', 'Q', 'V', 'S'};
constexpr uint32_t kVersion = 1;

void put_u32(std::string& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& out, uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f32(std::string& out, float v) {
    put_u32(out, std::bit_cast<uint32_t>(v));
}

struct ByteReader {
    std::string_view data;
    size_t pos = 0;

    void need(size_t n) const {
        if (pos + n > data.size()) throw vector_io_error("truncated vector file");
    }
    uint32_t u32() {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<uint32_t>(static_cast<unsigned char>(data[pos++])) << (8 * i);
        return v;
    }
    uint64_t u64() {
        need(8);
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<uint64_t>(static_cast<unsigned char>(data[pos++])) << (8 * i);
        return v;
    }
    float f32() { return std::bit_cast<float>(u32()); }
    std::string_view bytes(size_t n) {
        need(n);
        auto s = data.substr(pos, n);
        pos += n;
        return s;
    }
};

}  // namespace

VectorStore VectorStore::from_rows(
    std::vector<std::pair<std::string, std::vector<float>>> rows) {
    VectorStore store;
    if (rows.empty()) return store;
    store.dim_ = rows.front().second.size();
    if (store.dim_ == 0) throw vector_io_error("vector rows must have positive dimension");
    std::unordered_set<std::string_view> seen;
    store.ids_.reserve(rows.size());
    store.data_.reserve(rows.size() * store.dim_);
    for (auto& [id, values] : rows) {
        if (values.size() != store.dim_)
            throw vector_io_error("vector dimension mismatch for id \"" + id + "\"");
        store.data_.insert(store.data_.end(), values.begin(), values.end());
        store.ids_.push_back(std::move(id));
    }
    for (const auto& id : store.ids_)
        if (!seen.insert(id).second) throw vector_io_error("duplicate vector id \"" + id + "\"");
    return store;
}

void VectorStore::save(const std::filesystem::path& path) const {
    std::string out;
    out.append(kMagic, sizeof(kMagic));
    put_u32(out, kVersion);
    put_u64(out, ids_.size());
    put_u32(out, static_cast<uint32_t>(dim_));
    for (size_t r = 0; r < ids_.size(); ++r) {
        put_u32(out, static_cast<uint32_t>(ids_[r].size()));
        out.append(ids_[r]);
        for (size_t d = 0; d < dim_; ++d) put_f32(out, data_[r * dim_ + d]);
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw vector_io_error("cannot open vector file for writing: " + path.string());
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw vector_io_error("failed writing vector file: " + path.string());
}

VectorStore VectorStore::load(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw vector_io_error("cannot open vector file: " + path.string());
    std::string data((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    ByteReader in{data};
    if (std::string_view(in.bytes(4)) != std::string_view(kMagic, 4))
        throw vector_io_error("bad vector file magic");
    if (in.u32() != kVersion) throw vector_io_error("unsupported vector file version");
    uint64_t count = in.u64();
    uint32_t dim = in.u32();
    if (count > 0 && dim == 0) throw vector_io_error("vector file has zero dimension");

    VectorStore store;
    store.dim_ = dim;
    store.ids_.reserve(count);
    store.data_.reserve(count * dim);
    std::unordered_set<std::string> seen;
    for (uint64_t r = 0; r < count; ++r) {
        uint32_t id_len = in.u32();
        std::string id(in.bytes(id_len));
        if (!seen.insert(id).second)
            throw vector_io_error("duplicate vector id \"" + id + "\"");
        store.ids_.push_back(std::move(id));
        for (uint32_t d = 0; d < dim; ++d) store.data_.push_back(in.f32());
    }
    if (in.pos != data.size()) throw vector_io_error("trailing bytes in vector file");
    return store;
}

float VectorStore::score(const std::vector<float>& query, size_t row) const {
    const float* v = data_.data() + row * dim_;
    float acc = 0.0f;
    for (size_t d = 0; d < dim_; ++d) acc += query[d] * v[d];
    return acc;
}

RankedList top_k_dense(const std::vector<float>& query, const VectorStore& store, size_t k,
                       size_t partitions) {
    if (k == 0) throw std::invalid_argument("top_k_dense requires k >= 1");
    if (query.size() != store.dim() && store.size() > 0)
        throw std::invalid_argument("query dimension does not match the vector store");
    if (partitions == 0) partitions = 1;

    const size_t n = store.size();
    partitions = std::min(partitions, std::max<size_t>(n, 1));
    auto better = [](const ScoredId& a, const ScoredId& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.id < b.id;
    };

    std::vector<std::vector<ScoredId>> per_part(partitions);
    parallel_for(partitions, partitions, [&](size_t p) {
        size_t begin = n * p / partitions;
        size_t end = n * (p + 1) / partitions;
        auto& local = per_part[p];
        for (size_t r = begin; r < end; ++r) {
            local.push_back({store.id(r), store.score(query, r)});
        }
        if (local.size() > k) {
            std::nth_element(local.begin(), local.begin() + static_cast<ptrdiff_t>(k),
                             local.end(), better);
            local.resize(k);
        }
    });

    RankedList merged;
    for (auto& part : per_part)
        merged.insert(merged.end(), std::make_move_iterator(part.begin()),
                      std::make_move_iterator(part.end()));
    std::sort(merged.begin(), merged.end(), better);
    if (merged.size() > k) merged.resize(k);
    return merged;
}

}  // namespace citeqa
