#include "citeqa/chunking.hpp"

#include <algorithm>
#include <stdexcept>

namespace citeqa {

const std::vector<ChunkConfig>& default_chunk_configs() {
    static const std::vector<ChunkConfig> configs = {{128, 64}, {256, 128}, {512, 256}};
    return configs;
}

std::vector<TextBlock> chunk(std::string_view text, ChunkConfig config,
                             std::string_view doc_id) {
    if (config.m == 0 || config.m > config.n)
        throw std::invalid_argument("chunk config requires 0 < m <= n");
    std::vector<TextBlock> blocks;
    auto spans = word_spans(text);
    size_t total = spans.size();
    if (total == 0) return blocks;
    for (size_t start = 0;; start += config.m) {
        size_t end = std::min(start + config.n, total);
        TextBlock b;
        b.doc_id = std::string(doc_id);
        b.start = start;
        b.word_count = end - start;
        b.config = config;
        b.text = std::string(
            text.substr(spans[start].first, spans[end - 1].second - spans[start].first));
        blocks.push_back(std::move(b));
        if (start + config.n >= total) break;
    }
    return blocks;
}

std::vector<TextBlock> chunk_multi(std::string_view text,
                                   const std::vector<ChunkConfig>& configs,
                                   std::string_view doc_id) {
    std::vector<TextBlock> all;
    for (const auto& config : configs) {
        auto blocks = chunk(text, config, doc_id);
        all.insert(all.end(), std::make_move_iterator(blocks.begin()),
                   std::make_move_iterator(blocks.end()));
    }
    return all;
}

SelectResult select_context(std::string_view question, const std::vector<TextBlock>& blocks,
                            Bm25Params params) {
    if (blocks.empty()) throw std::invalid_argument("select_context requires at least one block");

    // Transient index over just these blocks; document frequencies and
    // average length are local to the candidate set.
    IndexBuilder builder(params);
    for (size_t i = 0; i < blocks.size(); ++i) builder.add(std::to_string(i), blocks[i].text);
    auto idx = builder.finish();
    auto query = tokenize(question);

    SelectResult best;
    best.index = 0;
    best.score = idx.score(query, 0);
    for (size_t i = 1; i < blocks.size(); ++i) {
        double s = idx.score(query, static_cast<uint32_t>(i));
        bool wins = false;
        if (s != best.score) {
            wins = s > best.score;
        } else if (blocks[i].config.n != blocks[best.index].config.n) {
            wins = blocks[i].config.n < blocks[best.index].config.n;
        } else if (blocks[i].start != blocks[best.index].start) {
            wins = blocks[i].start < blocks[best.index].start;
        }
        if (wins) {
            best.index = i;
            best.score = s;
        }
    }
    if (best.score == 0.0) {
        best.index = 0;
        best.weak = true;
    }
    return best;
}

std::vector<Passage> split_100w(std::string_view id_prefix, std::string_view title,
                                std::string_view body) {
    constexpr size_t kUnit = 100;
    std::vector<Passage> out;
    auto spans = word_spans(body);
    for (size_t start = 0; start < spans.size(); start += kUnit) {
        size_t end = std::min(start + kUnit, spans.size());
        Passage p;
        p.id = std::string(id_prefix) + ":" + std::to_string(out.size());
        p.title = std::string(title);
        p.text = std::string(
            body.substr(spans[start].first, spans[end - 1].second - spans[start].first));
        out.push_back(std::move(p));
    }
    return out;
}

}  // namespace citeqa
