#pragma once

// Deterministic synthetic translation task. A "direction" is a token
// substitution plus an optional sequence reversal; clients in non-IID mode
// each hold exactly one direction, IID mode deals the pooled data out evenly.

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fedcast/error.hpp"
#include "fedcast/rng.hpp"

namespace fedcast {

struct DirectionSpec {
    std::uint32_t direction_id = 0;
    std::vector<std::uint32_t> substitution;  // bijection on [0, vocab)
    bool reversed = false;

    std::uint32_t vocab() const { return static_cast<std::uint32_t>(substitution.size()); }
};

struct TranslationPair {
    std::vector<std::uint32_t> src;
    std::vector<std::uint32_t> tgt;

    bool operator==(const TranslationPair&) const = default;
};

struct TaskConfig {
    std::uint32_t vocab = 16;
    std::uint32_t seq_len = 8;
    std::uint32_t train_per_direction = 2000;
    std::uint32_t val_per_direction = 400;
    std::uint32_t test_per_direction = 400;
};

enum class DataMode { Iid, NonIid };

inline DirectionSpec make_direction(std::uint64_t master_seed, std::uint32_t direction_id,
                                    std::uint32_t vocab) {
    if (vocab < 2) throw ConfigError("make_direction: vocab must be >= 2");
    DirectionSpec spec;
    spec.direction_id = direction_id;
    spec.substitution.resize(vocab);
    for (std::uint32_t i = 0; i < vocab; ++i) spec.substitution[i] = i;
    Rng rng(derive_seed(master_seed, "direction", direction_id));
    rng.shuffle(spec.substitution);
    spec.reversed = rng.below(2) == 1;
    return spec;
}

/// tgt[i] = substitution[src[len-1-i]] when reversed, substitution[src[i]] otherwise.
inline std::vector<std::uint32_t> apply_direction(const DirectionSpec& spec,
                                                  const std::vector<std::uint32_t>& src) {
    std::vector<std::uint32_t> tgt(src.size());
    for (std::size_t i = 0; i < src.size(); ++i) {
        const std::uint32_t token = spec.reversed ? src[src.size() - 1 - i] : src[i];
        if (token >= spec.vocab()) throw DataError("apply_direction: token out of range");
        tgt[i] = spec.substitution[token];
    }
    return tgt;
}

/// Position 0 of every source carries the direction token (direction_id mod
/// vocab) so mixed-direction training data stays unambiguous, mirroring how
/// real multilingual text identifies its own language; the remaining
/// positions are uniform i.i.d. draws.
inline std::vector<TranslationPair> sample_pairs(const DirectionSpec& spec, std::size_t count,
                                                 std::uint32_t seq_len, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<TranslationPair> pairs;
    pairs.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        TranslationPair p;
        p.src.resize(seq_len);
        for (std::uint32_t s = 0; s < seq_len; ++s)
            p.src[s] = static_cast<std::uint32_t>(rng.below(spec.vocab()));
        if (seq_len > 0) p.src[0] = spec.direction_id % spec.vocab();
        p.tgt = apply_direction(spec, p.src);
        pairs.push_back(std::move(p));
    }
    return pairs;
}

struct DataPartition {
    DataMode mode = DataMode::NonIid;
    std::vector<DirectionSpec> directions;
    std::vector<std::vector<TranslationPair>> client_train;        // per client
    std::vector<std::vector<TranslationPair>> direction_val;       // per direction
    std::vector<std::vector<TranslationPair>> direction_test;      // per direction
    std::vector<std::vector<std::uint64_t>> direction_counts;      // [client][direction]

    std::vector<std::uint64_t> sample_counts() const {
        std::vector<std::uint64_t> n;
        n.reserve(client_train.size());
        for (const auto& c : client_train) n.push_back(c.size());
        return n;
    }

    std::uint64_t total_samples() const {
        std::uint64_t n = 0;
        for (const auto& c : client_train) n += c.size();
        return n;
    }

    /// Server-side validation pool: the union over directions.
    std::vector<TranslationPair> server_validation() const {
        std::vector<TranslationPair> all;
        for (const auto& d : direction_val) all.insert(all.end(), d.begin(), d.end());
        return all;
    }

    std::vector<TranslationPair> server_test() const {
        std::vector<TranslationPair> all;
        for (const auto& d : direction_test) all.insert(all.end(), d.begin(), d.end());
        return all;
    }
};

inline DataPartition build_partition(std::uint32_t clients, DataMode mode, const TaskConfig& task,
                                     std::uint64_t master_seed) {
    if (clients < 1) throw ConfigError("build_partition: need at least one client");
    if (task.vocab < 2) throw ConfigError("build_partition: vocab must be >= 2");
    if (task.seq_len < 1) throw ConfigError("build_partition: seq_len must be >= 1");
    if (clients > task.vocab)
        throw ConfigError("build_partition: clients must not exceed vocab (direction tokens)");
    if (task.train_per_direction == 0 || task.val_per_direction == 0 ||
        task.test_per_direction == 0)
        throw ConfigError("build_partition: per-direction sizes must be positive");

    DataPartition part;
    part.mode = mode;
    std::vector<std::vector<TranslationPair>> direction_train(clients);
    for (std::uint32_t d = 0; d < clients; ++d) {
        part.directions.push_back(make_direction(master_seed, d, task.vocab));
        direction_train[d] = sample_pairs(part.directions[d], task.train_per_direction,
                                          task.seq_len, derive_seed(master_seed, "train_pairs", d));
        part.direction_val.push_back(sample_pairs(part.directions[d], task.val_per_direction,
                                                  task.seq_len,
                                                  derive_seed(master_seed, "val_pairs", d)));
        part.direction_test.push_back(sample_pairs(part.directions[d], task.test_per_direction,
                                                   task.seq_len,
                                                   derive_seed(master_seed, "test_pairs", d)));
    }

    part.client_train.assign(clients, {});
    part.direction_counts.assign(clients, std::vector<std::uint64_t>(clients, 0));
    if (mode == DataMode::NonIid) {
        for (std::uint32_t k = 0; k < clients; ++k) {
            part.client_train[k] = std::move(direction_train[k]);
            part.direction_counts[k][k] = part.client_train[k].size();
        }
    } else {
        // pool all directions, shuffle once, deal equal contiguous shares
        std::vector<std::pair<std::uint32_t, TranslationPair>> pool;
        pool.reserve(static_cast<std::size_t>(clients) * task.train_per_direction);
        for (std::uint32_t d = 0; d < clients; ++d)
            for (auto& p : direction_train[d]) pool.emplace_back(d, std::move(p));
        Rng rng(derive_seed(master_seed, "iid_shuffle"));
        rng.shuffle(pool);
        const std::size_t share = pool.size() / clients;
        for (std::uint32_t k = 0; k < clients; ++k) {
            for (std::size_t i = 0; i < share; ++i) {
                auto& [d, p] = pool[static_cast<std::size_t>(k) * share + i];
                ++part.direction_counts[k][d];
                part.client_train[k].push_back(std::move(p));
            }
        }
    }
    return part;
}

inline void write_pairs_tsv(const std::string& path, const std::vector<TranslationPair>& pairs) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    for (const auto& p : pairs) {
        for (std::size_t i = 0; i < p.src.size(); ++i) {
            if (i) out << ' ';
            out << p.src[i];
        }
        out << '\t';
        for (std::size_t i = 0; i < p.tgt.size(); ++i) {
            if (i) out << ' ';
            out << p.tgt[i];
        }
        out << '\n';
    }
    if (!out) throw IoError("short write to '" + path + "'");
}

inline std::vector<TranslationPair> read_pairs_tsv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::vector<TranslationPair> pairs;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const std::size_t tab = line.find('\t');
        if (tab == std::string::npos) throw IoError("pairs tsv: missing tab in '" + path + "'");
        TranslationPair p;
        std::istringstream src(line.substr(0, tab)), tgt(line.substr(tab + 1));
        std::uint32_t tok;
        while (src >> tok) p.src.push_back(tok);
        while (tgt >> tok) p.tgt.push_back(tok);
        pairs.push_back(std::move(p));
    }
    return pairs;
}

}  // namespace fedcast
