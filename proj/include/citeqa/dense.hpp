#pragma once

// Exact top-k inner-product retrieval over precomputed embedding vectors.
// Embeddings come from external encoder checkpoints; this module only scores.

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "citeqa/bm25.hpp"  // ScoredId / RankedList

namespace citeqa {

class vector_io_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Row-major float32 matrix with one external passage id per row.
//
// File layout (little-endian): magic "CQVS", u32 version (1), u64 row count,
// u32 dim, then per row a u32 id byte length, the id bytes, and dim float32
// values.
class VectorStore {
public:
    VectorStore() = default;

    // Throws vector_io_error on malformed rows or duplicate ids.
    static VectorStore from_rows(std::vector<std::pair<std::string, std::vector<float>>> rows);

    static VectorStore load(const std::filesystem::path& path);  // throws vector_io_error
    void save(const std::filesystem::path& path) const;          // throws vector_io_error

    size_t size() const { return ids_.size(); }
    size_t dim() const { return dim_; }
    const std::string& id(size_t row) const { return ids_[row]; }
    const float* row(size_t row) const { return data_.data() + row * dim_; }

    // Inner product of query and row, accumulated in float32 in index order
    // so the value is reproducible bit-for-bit.
    float score(const std::vector<float>& query, size_t row) const;

private:
    size_t dim_ = 0;
    std::vector<std::string> ids_;
    std::vector<float> data_;
};

// Exact top-k by inner product; ties by ascending passage id. The store is
// scanned in `partitions` contiguous slices whose per-slice winners merge in
// slice order, so any partition count yields identical results. Fewer than k
// rows yield the full ranking. Throws std::invalid_argument when the query
// dimension differs from the store's or k == 0.
RankedList top_k_dense(const std::vector<float>& query, const VectorStore& store, size_t k,
                       size_t partitions = 1);

}  // namespace citeqa
