/* Copyright 2026 The kgalign Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#include "kgalign/openea.hpp"

#include <fstream>
#include <set>
#include <unordered_set>

namespace kgalign {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find('\t', start);
    if (pos == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

std::ifstream open_or_throw(const fs::path& file) {
  if (!fs::exists(file)) {
    throw DataError("missing dataset file: " + file.string());
  }
  std::ifstream in(file);
  if (!in) throw DataError("cannot open dataset file: " + file.string());
  return in;
}

struct RawTriple {
  std::string head, rel, tail;
};

std::vector<RawTriple> read_triple_file(const fs::path& file) {
  std::ifstream in = open_or_throw(file);
  std::vector<RawTriple> out;
  std::string line;
  int64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip_cr(line);
    if (line.empty()) continue;
    auto fields = split_tabs(line);
    if (fields.size() != 3 || fields[0].empty() || fields[1].empty() || fields[2].empty()) {
      throw DataError(file.string() + ":" + std::to_string(lineno) +
                      ": expected 3 tab-separated fields, got " +
                      std::to_string(fields.size()));
    }
    out.push_back({std::move(fields[0]), std::move(fields[1]), std::move(fields[2])});
  }
  return out;
}

std::vector<std::pair<std::string, std::string>> read_pair_file(const fs::path& file) {
  std::ifstream in = open_or_throw(file);
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  int64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip_cr(line);
    if (line.empty()) continue;
    auto fields = split_tabs(line);
    if (fields.size() != 2 || fields[0].empty() || fields[1].empty()) {
      throw DataError(file.string() + ":" + std::to_string(lineno) +
                      ": expected 2 tab-separated fields, got " +
                      std::to_string(fields.size()));
    }
    out.emplace_back(std::move(fields[0]), std::move(fields[1]));
  }
  return out;
}

struct TripleKeyHash {
  std::size_t operator()(const Triple& t) const {
    std::size_t h = static_cast<std::size_t>(t.head);
    h = h * 1000003u + static_cast<std::size_t>(t.rel);
    h = h * 1000003u + static_cast<std::size_t>(t.tail);
    return h;
  }
};

/// Interns URIs in first-appearance order, dropping self-loops and duplicates.
std::vector<Triple> intern_triples(const std::vector<RawTriple>& raw, IdMaps& maps,
                                   bool is_source, int64_t* dropped_loops,
                                   int64_t* dropped_dups) {
  std::vector<Triple> triples;
  triples.reserve(raw.size());
  std::unordered_set<Triple, TripleKeyHash> seen;
  seen.reserve(raw.size());
  for (const RawTriple& rt : raw) {
    Triple t;
    t.head = is_source ? maps.intern_source(rt.head) : maps.intern_target(rt.head);
    t.rel = maps.intern_relation(rt.rel);
    t.tail = is_source ? maps.intern_source(rt.tail) : maps.intern_target(rt.tail);
    if (t.head == t.tail) {
      ++*dropped_loops;
      continue;
    }
    if (!seen.insert(t).second) {
      ++*dropped_dups;
      continue;
    }
    triples.push_back(t);
  }
  return triples;
}

std::vector<std::pair<EntityId, EntityId>> map_links(
    const std::vector<std::pair<std::string, std::string>>& raw, const IdMaps& maps,
    const fs::path& file) {
  std::vector<std::pair<EntityId, EntityId>> out;
  out.reserve(raw.size());
  for (const auto& [src, tgt] : raw) {
    const auto sit = maps.source_entity_ids.find(src);
    if (sit == maps.source_entity_ids.end()) {
      throw DataError(file.string() + ": link references unknown source URI '" + src + "'");
    }
    const auto tit = maps.target_entity_ids.find(tgt);
    if (tit == maps.target_entity_ids.end()) {
      throw DataError(file.string() + ": link references unknown target URI '" + tgt + "'");
    }
    out.emplace_back(sit->second, tit->second);
  }
  return out;
}

}  // namespace

LoadedDataset load_openea(const fs::path& directory, int fold) {
  if (fold < 1 || fold > 5) {
    throw DataError("fold must be in [1, 5], got " + std::to_string(fold));
  }
  if (!fs::exists(directory)) {
    throw DataError("dataset directory does not exist: " + directory.string());
  }

  LoadedDataset result;
  IdMaps& maps = result.bundle.id_maps;
  LoadReport& report = result.report;

  const auto raw_src = read_triple_file(directory / "rel_triples_1");
  const auto raw_tgt = read_triple_file(directory / "rel_triples_2");
  auto src_triples = intern_triples(raw_src, maps, /*is_source=*/true,
                                    &report.dropped_self_loops[0],
                                    &report.dropped_duplicates[0]);
  auto tgt_triples = intern_triples(raw_tgt, maps, /*is_source=*/false,
                                    &report.dropped_self_loops[1],
                                    &report.dropped_duplicates[1]);

  // ent_links may introduce entities that never occur in a triple; keep them
  // as isolated nodes.
  const auto raw_links = read_pair_file(directory / "ent_links");
  for (const auto& [src, tgt] : raw_links) {
    maps.intern_source(src);
    maps.intern_target(tgt);
  }
  result.bundle.all_links = map_links(raw_links, maps, directory / "ent_links");

  const fs::path fold_dir = directory / "721_5fold" / std::to_string(fold);
  const auto train = map_links(read_pair_file(fold_dir / "train_links"), maps,
                               fold_dir / "train_links");
  const auto valid = map_links(read_pair_file(fold_dir / "valid_links"), maps,
                               fold_dir / "valid_links");
  const auto test = map_links(read_pair_file(fold_dir / "test_links"), maps,
                              fold_dir / "test_links");
  if (train.empty()) report.warnings.push_back("train_links is empty");
  if (valid.empty()) report.warnings.push_back("valid_links is empty");
  if (test.empty()) report.warnings.push_back("test_links is empty");

  // The three splits must be disjoint.
  std::set<std::pair<EntityId, EntityId>> seen;
  for (const auto* split : {&train, &valid, &test}) {
    for (const auto& pair : *split) {
      if (!seen.insert(pair).second) {
        throw DataError("alignment pair appears in more than one split (source id " +
                        std::to_string(pair.first) + ")");
      }
    }
  }

  result.bundle.seeds.train = train;
  result.bundle.seeds.valid = valid;
  result.bundle.seeds.test = test;

  const auto n_rel = static_cast<int32_t>(maps.relation_uris.size());
  result.bundle.source = KnowledgeGraph::from_triples(
      static_cast<int32_t>(maps.source_entity_uris.size()), n_rel, std::move(src_triples));
  result.bundle.target = KnowledgeGraph::from_triples(
      static_cast<int32_t>(maps.target_entity_uris.size()), n_rel, std::move(tgt_triples));
  return result;
}

namespace {

void write_triples(const fs::path& file, const KnowledgeGraph& kg,
                   const std::vector<std::string>& entity_uris,
                   const std::vector<std::string>& relation_uris) {
  std::ofstream out(file);
  if (!out) throw DataError("cannot write " + file.string());
  for (const Triple& t : kg.triples) {
    out << entity_uris[t.head] << '\t' << relation_uris[t.rel] << '\t' << entity_uris[t.tail]
        << '\n';
  }
}

void write_pairs(const fs::path& file,
                 const std::vector<std::pair<EntityId, EntityId>>& pairs,
                 const IdMaps& maps) {
  std::ofstream out(file);
  if (!out) throw DataError("cannot write " + file.string());
  for (const auto& [s, t] : pairs) {
    out << maps.source_entity_uris[s] << '\t' << maps.target_entity_uris[t] << '\n';
  }
}

}  // namespace

void save_openea(const DatasetBundle& bundle, const fs::path& directory, int fold) {
  const fs::path fold_dir = directory / "721_5fold" / std::to_string(fold);
  fs::create_directories(fold_dir);
  write_triples(directory / "rel_triples_1", bundle.source, bundle.id_maps.source_entity_uris,
                bundle.id_maps.relation_uris);
  write_triples(directory / "rel_triples_2", bundle.target, bundle.id_maps.target_entity_uris,
                bundle.id_maps.relation_uris);
  write_pairs(directory / "ent_links", bundle.all_links, bundle.id_maps);
  write_pairs(fold_dir / "train_links", bundle.seeds.train, bundle.id_maps);
  write_pairs(fold_dir / "valid_links", bundle.seeds.valid, bundle.id_maps);
  write_pairs(fold_dir / "test_links", bundle.seeds.test, bundle.id_maps);
}

}  // namespace kgalign
