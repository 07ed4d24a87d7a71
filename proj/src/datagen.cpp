#include "talloc/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

namespace talloc {

SyntheticDataset gen_clusters(const SyntheticDatasetSpec& spec) {
  if (spec.n_points <= 0) {
    throw ValidationError("n_points must be positive");
  }
  Rng rng(spec.seed);
  SyntheticDataset ds;
  ds.mu = rng.uniform();
  ds.variances = {rng.uniform(), rng.uniform()};
  const std::array<double, 2> sd = {std::sqrt(ds.variances[0]),
                                    std::sqrt(ds.variances[1])};
  ds.tasks.reserve(spec.n_points);
  ds.gold.reserve(spec.n_points);
  for (int i = 0; i < spec.n_points; ++i) {
    const int c = rng.uniform_int(0, spec.n_clusters - 1);
    const double off = spec.cluster_offsets[static_cast<size_t>(c)];
    Task t;
    t.id = i;
    t.category = c;
    t.features = {rng.normal(ds.mu + off, sd[0]), rng.normal(ds.mu + off, sd[1])};
    ds.tasks.push_back(std::move(t));
    ds.gold.push_back(rng.bernoulli(0.5));
  }
  return ds;
}

DSimMatrix gen_dsim_noisy(double s, int category_count, int m) {
  if (s < 0.0 || s > 2.0 / 3.0) {
    throw OutOfRangeError("dSim noise s must lie in [0, 2/3], got " +
                          std::to_string(s));
  }
  DSimMatrix d;
  d.m = m;
  d.categories = category_count;
  d.scores.assign(static_cast<size_t>(m) * category_count, s / 2.0);
  for (int i = 0; i < m; ++i) {
    d.at(i, i % category_count) = 1.0 - s;
  }
  return d;
}

ReplayDataset gen_surrogate_replay(const SurrogateReplayConfig& cfg) {
  if (cfg.n_tasks <= 0 || cfg.annotators_per_group <= 0 ||
      cfg.feature_dim <= 0 || cfg.annotations_per_group <= 0) {
    throw ValidationError("surrogate replay counts must be positive");
  }
  if (cfg.annotations_per_group > cfg.annotators_per_group) {
    throw ValidationError("annotations_per_group exceeds group pool size");
  }
  Rng rng(cfg.seed);
  ReplayDataset ds;
  const int m = cfg.annotators_per_group * cfg.n_groups;
  ds.annotator_category.resize(m);
  for (int a = 0; a < m; ++a) {
    ds.annotator_category[a] = a / cfg.annotators_per_group;
  }

  ds.tasks.reserve(cfg.n_tasks);
  ds.annotations.resize(cfg.n_tasks);
  ds.gold_objective.resize(cfg.n_tasks);
  ds.gold_subjective.resize(cfg.n_tasks);

  std::vector<int> pool(cfg.annotators_per_group);
  for (int t = 0; t < cfg.n_tasks; ++t) {
    const int group = rng.uniform_int(0, cfg.n_groups - 1);
    Task task;
    task.id = t;
    task.category = group;
    // Weak group signal in the features plus isotropic noise.
    task.features.resize(cfg.feature_dim);
    for (int d = 0; d < cfg.feature_dim; ++d) {
      const double shift = (d % cfg.n_groups == group) ? 1.0 : 0.0;
      task.features[d] = rng.normal(shift, 1.0);
    }
    ds.tasks.push_back(std::move(task));
    ds.task_index_by_id[t] = t;

    const int latent = rng.bernoulli(0.5);
    auto& ann = ds.annotations[t];
    std::vector<int> matched_labels;
    std::vector<int> all_labels;
    for (int g = 0; g < cfg.n_groups; ++g) {
      // Partial Fisher-Yates: pick annotations_per_group distinct annotators.
      std::iota(pool.begin(), pool.end(), g * cfg.annotators_per_group);
      for (int pick = 0; pick < cfg.annotations_per_group; ++pick) {
        const int j =
            rng.uniform_int(pick, cfg.annotators_per_group - 1);
        std::swap(pool[pick], pool[j]);
        const int annot = pool[pick];
        const double acc = (g == group) ? cfg.p_match : cfg.p_other;
        const int label = rng.bernoulli(acc) ? latent : 1 - latent;
        ann.emplace_back(annot, label);
        all_labels.push_back(label);
        if (g == group) matched_labels.push_back(label);
      }
    }
    std::sort(ann.begin(), ann.end());
    ds.gold_objective[t] = majority_vote(all_labels);
    ds.gold_subjective[t] = majority_vote(matched_labels);
  }
  return ds;
}

void validate_replay(const ReplayDataset& ds) {
  const int m = ds.m();
  if (ds.tasks.empty()) throw ValidationError("replay has no tasks");
  if (m == 0) throw ValidationError("replay has no annotators");
  const size_t dim = ds.tasks.front().features.size();
  for (const Task& t : ds.tasks) {
    if (t.features.size() != dim) {
      throw ValidationError("task " + std::to_string(t.id) +
                            " feature dimension differs from the first task");
    }
  }
  if (ds.annotations.size() != ds.tasks.size() ||
      ds.gold_objective.size() != ds.tasks.size() ||
      ds.gold_subjective.size() != ds.tasks.size()) {
    throw ValidationError("per-task sections have inconsistent sizes");
  }
  for (size_t i = 0; i < ds.tasks.size(); ++i) {
    if (ds.annotations[i].empty()) {
      throw ValidationError("task " + std::to_string(ds.tasks[i].id) +
                            " has no available annotator");
    }
    for (const auto& [annot, label] : ds.annotations[i]) {
      if (annot < 0 || annot >= m) {
        throw ValidationError("annotation references unknown annotator id " +
                              std::to_string(annot));
      }
      if (label != 0 && label != 1) {
        throw ValidationError("annotation label must be 0 or 1");
      }
    }
  }
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

long parse_int(const std::string& s, long line_no) {
  try {
    size_t pos = 0;
    const long v = std::stol(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError("expected integer, got '" + s + "'", line_no);
  }
}

double parse_double(const std::string& s, long line_no) {
  try {
    size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError("expected number, got '" + s + "'", line_no);
  }
}

}  // namespace

ReplayDataset load_replay(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open replay file: " + path);

  ReplayDataset ds;
  std::unordered_map<int, int> annot_ids;  // id -> index
  std::vector<std::tuple<int, int, int>> raw_annotations;
  std::vector<std::pair<int, int>> raw_gold_obj, raw_gold_subj;
  std::vector<int> annot_id_order;

  std::string section;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      section = line;
      continue;
    }
    const auto f = split_csv(line);
    if (section == "#tasks") {
      if (f.size() < 3) throw ParseError("task row needs id,category,v1,...", line_no);
      Task t;
      t.id = static_cast<int>(parse_int(f[0], line_no));
      t.category = static_cast<int>(parse_int(f[1], line_no));
      for (size_t i = 2; i < f.size(); ++i) {
        t.features.push_back(parse_double(f[i], line_no));
      }
      if (ds.task_index_by_id.count(t.id)) {
        throw ValidationError("duplicate task id " + std::to_string(t.id));
      }
      ds.task_index_by_id[t.id] = static_cast<int>(ds.tasks.size());
      ds.tasks.push_back(std::move(t));
    } else if (section == "#annotators") {
      if (f.size() != 2) throw ParseError("annotator row needs id,category", line_no);
      const int id = static_cast<int>(parse_int(f[0], line_no));
      const int cat = static_cast<int>(parse_int(f[1], line_no));
      if (annot_ids.count(id)) {
        throw ValidationError("duplicate annotator id " + std::to_string(id));
      }
      annot_ids[id] = static_cast<int>(annot_id_order.size());
      annot_id_order.push_back(cat);
    } else if (section == "#annotations") {
      if (f.size() != 3) {
        throw ParseError("annotation row needs task_id,annotator_id,label", line_no);
      }
      raw_annotations.emplace_back(static_cast<int>(parse_int(f[0], line_no)),
                                   static_cast<int>(parse_int(f[1], line_no)),
                                   static_cast<int>(parse_int(f[2], line_no)));
    } else if (section == "#gold_objective" || section == "#gold_subjective") {
      if (f.size() != 2) throw ParseError("gold row needs task_id,label", line_no);
      auto& dst = (section == "#gold_objective") ? raw_gold_obj : raw_gold_subj;
      dst.emplace_back(static_cast<int>(parse_int(f[0], line_no)),
                       static_cast<int>(parse_int(f[1], line_no)));
    } else {
      throw ParseError("data before any recognized section header", line_no);
    }
  }

  ds.annotator_category = annot_id_order;
  ds.annotations.resize(ds.tasks.size());
  ds.gold_objective.assign(ds.tasks.size(), -1);
  ds.gold_subjective.assign(ds.tasks.size(), -1);

  for (const auto& [task_id, annot_id, label] : raw_annotations) {
    auto it = ds.task_index_by_id.find(task_id);
    if (it == ds.task_index_by_id.end()) {
      throw ValidationError("annotation references unknown task id " +
                            std::to_string(task_id));
    }
    auto ait = annot_ids.find(annot_id);
    if (ait == annot_ids.end()) {
      throw ValidationError("annotation references unknown annotator id " +
                            std::to_string(annot_id));
    }
    ds.annotations[static_cast<size_t>(it->second)].emplace_back(ait->second,
                                                                 label);
  }
  for (auto& ann : ds.annotations) std::sort(ann.begin(), ann.end());

  auto fill_gold = [&](const std::vector<std::pair<int, int>>& raw,
                       std::vector<int>& dst, const char* name) {
    for (const auto& [task_id, label] : raw) {
      auto it = ds.task_index_by_id.find(task_id);
      if (it == ds.task_index_by_id.end()) {
        throw ValidationError(std::string(name) +
                              " references unknown task id " +
                              std::to_string(task_id));
      }
      dst[static_cast<size_t>(it->second)] = label;
    }
    for (size_t i = 0; i < dst.size(); ++i) {
      if (dst[i] != 0 && dst[i] != 1) {
        throw ValidationError(std::string(name) + " missing for task id " +
                              std::to_string(ds.tasks[i].id));
      }
    }
  };
  fill_gold(raw_gold_obj, ds.gold_objective, "gold_objective");
  fill_gold(raw_gold_subj, ds.gold_subjective, "gold_subjective");

  validate_replay(ds);
  return ds;
}

void save_replay(const ReplayDataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write replay file: " + path);
  char buf[64];
  out << "#tasks\n";
  for (const Task& t : ds.tasks) {
    out << t.id << ',' << t.category;
    for (double v : t.features) {
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      out << ',' << buf;
    }
    out << '\n';
  }
  out << "#annotators\n";
  for (int a = 0; a < ds.m(); ++a) {
    out << a << ',' << ds.annotator_category[static_cast<size_t>(a)] << '\n';
  }
  out << "#annotations\n";
  for (size_t i = 0; i < ds.tasks.size(); ++i) {
    for (const auto& [annot, label] : ds.annotations[i]) {
      out << ds.tasks[i].id << ',' << annot << ',' << label << '\n';
    }
  }
  out << "#gold_objective\n";
  for (size_t i = 0; i < ds.tasks.size(); ++i) {
    out << ds.tasks[i].id << ',' << ds.gold_objective[i] << '\n';
  }
  out << "#gold_subjective\n";
  for (size_t i = 0; i < ds.tasks.size(); ++i) {
    out << ds.tasks[i].id << ',' << ds.gold_subjective[i] << '\n';
  }
}

}  // namespace talloc
