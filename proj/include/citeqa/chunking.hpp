#pragma once

// Sliding-window document chunking, BM25-based context-block selection, and
// fixed-size passage splitting for the retrieval corpus.

#include <string>
#include <string_view>
#include <vector>

#include "citeqa/bm25.hpp"

namespace citeqa {

// An n-word window advanced by m words per step; requires 0 < m <= n.
struct ChunkConfig {
    size_t n = 128;
    size_t m = 64;

    bool operator==(const ChunkConfig&) const = default;
};

// Window sizes paired with half-window strides: (128,64), (256,128), (512,256).
const std::vector<ChunkConfig>& default_chunk_configs();

struct TextBlock {
    std::string doc_id;
    std::string text;       // original text slice; casing and punctuation kept
    size_t start = 0;       // word offset of the first word in the source
    size_t word_count = 0;  // <= config.n
    ChunkConfig config;
};

// Blocks starting at word offsets 0, m, 2m, ...; each spans
// [start, min(start+n, L)); generation stops with the first block whose
// window reaches the end. Empty input yields no blocks.
// Throws std::invalid_argument on an invalid config.
std::vector<TextBlock> chunk(std::string_view text, ChunkConfig config,
                             std::string_view doc_id = {});

// Concatenation of chunk(text, c) over configs, in config order.
std::vector<TextBlock> chunk_multi(std::string_view text,
                                   const std::vector<ChunkConfig>& configs,
                                   std::string_view doc_id = {});

struct SelectResult {
    size_t index = 0;   // position in the input block list
    double score = 0.0;
    bool weak = false;  // no block shares a term with the question
};

// Scores each block against the question with a transient BM25 index over
// just these blocks and returns the argmax; ties break by smaller window n,
// then smaller start. If no block shares a term with the question the first
// block is returned with weak=true. Throws std::invalid_argument on an
// empty block list.
SelectResult select_context(std::string_view question, const std::vector<TextBlock>& blocks,
                            Bm25Params params = {});

struct Passage {
    std::string id;
    std::string title;
    std::string text;
};

// Consecutive non-overlapping 100-word units; the final unit may be shorter.
// Ids are "<id_prefix>:<k>" with k the 0-based unit ordinal.
std::vector<Passage> split_100w(std::string_view id_prefix, std::string_view title,
                                std::string_view body);

}  // namespace citeqa
