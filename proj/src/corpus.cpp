#include "rumour/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include "json.hpp"

namespace rumour {

namespace fs = std::filesystem;
using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

CorpusError::CorpusError(std::string file, std::string post_id, const std::string& message)
    : ValidationError(file + (post_id.empty() ? std::string() : ": post '" + post_id + "'") + ": " + message),
      file_(std::move(file)),
      post_id_(std::move(post_id)) {}

Post make_post(std::string id, std::string text, std::optional<std::string> parent,
               std::optional<Stance> stance) {
  Post p;
  p.has_url = text.find("http") != std::string::npos;
  p.has_hashtag = text.find('#') != std::string::npos;
  p.id = std::move(id);
  p.text = std::move(text);
  p.parent = std::move(parent);
  p.stance = stance;
  return p;
}

std::optional<std::size_t> Thread::index_of(std::string_view post_id) const {
  for (std::size_t i = 0; i < posts.size(); ++i) {
    if (posts[i].id == post_id) return i;
  }
  return std::nullopt;
}

void validate_thread(const Thread& thread, const std::string& origin) {
  if (thread.posts.empty()) throw CorpusError(origin, "", "thread has no posts");
  if (thread.posts.front().parent) {
    throw CorpusError(origin, thread.posts.front().id, "source post must not have a parent");
  }
  if (thread.veracity && thread.detection != Detection::Rumour) {
    throw CorpusError(origin, thread.id(), "veracity label requires detection label 'rumour'");
  }
  std::unordered_map<std::string_view, std::size_t> index;
  for (std::size_t i = 0; i < thread.posts.size(); ++i) {
    const Post& p = thread.posts[i];
    if (!index.emplace(p.id, i).second) throw CorpusError(origin, p.id, "duplicate post id");
  }
  std::vector<std::vector<std::size_t>> children(thread.posts.size());
  for (std::size_t i = 1; i < thread.posts.size(); ++i) {
    const Post& p = thread.posts[i];
    if (!p.parent) throw CorpusError(origin, p.id, "second root post (missing parent)");
    auto it = index.find(*p.parent);
    if (it == index.end()) throw CorpusError(origin, p.id, "orphan parent '" + *p.parent + "'");
    children[it->second].push_back(i);
  }
  // With a single root and every other post parented inside the thread, any
  // post not reachable from the root sits on a cycle.
  std::vector<bool> seen(thread.posts.size(), false);
  std::vector<std::size_t> stack{0};
  seen[0] = true;
  while (!stack.empty()) {
    std::size_t n = stack.back();
    stack.pop_back();
    for (std::size_t c : children[n]) {
      if (!seen[c]) {
        seen[c] = true;
        stack.push_back(c);
      }
    }
  }
  for (std::size_t i = 0; i < seen.size(); ++i) {
    if (!seen[i]) throw CorpusError(origin, thread.posts[i].id, "cyclic reply graph");
  }
}

Corpus Corpus::from_threads(std::vector<Thread> threads) {
  Corpus c;
  std::set<std::string> events;
  for (const Thread& t : threads) events.insert(t.event);
  c.threads = std::move(threads);
  c.events.assign(events.begin(), events.end());
  return c;
}

std::size_t Corpus::num_posts() const {
  std::size_t n = 0;
  for (const Thread& t : threads) n += t.posts.size();
  return n;
}

namespace {

std::optional<std::string> optional_string(const json& obj, const char* key, const std::string& origin,
                                           const std::string& post_id) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw CorpusError(origin, post_id, std::string("field '") + key + "' must be a string or null");
  return it->get<std::string>();
}

std::string required_string(const json& obj, const char* key, const std::string& origin, const std::string& post_id) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) {
    throw CorpusError(origin, post_id, std::string("missing string field '") + key + "'");
  }
  return it->get<std::string>();
}

Thread parse_thread(const json& obj, const std::string& origin) {
  if (!obj.is_object()) throw CorpusError(origin, "", "thread must be a JSON object");
  Thread thread;
  thread.event = required_string(obj, "event", origin, "");
  auto posts_it = obj.find("posts");
  if (posts_it == obj.end() || !posts_it->is_array() || posts_it->empty()) {
    throw CorpusError(origin, "", "missing or empty 'posts' array");
  }

  std::vector<Post> posts;
  for (const json& p : *posts_it) {
    if (!p.is_object()) throw CorpusError(origin, "", "post must be a JSON object");
    std::string id = required_string(p, "id", origin, "");
    std::string text = required_string(p, "text", origin, id);
    auto parent = optional_string(p, "parent", origin, id);
    std::optional<Stance> stance;
    if (auto s = optional_string(p, "stance", origin, id)) {
      stance = parse_stance(*s);
      if (!stance) throw CorpusError(origin, id, "unknown stance label '" + *s + "'");
    }
    posts.push_back(make_post(std::move(id), std::move(text), std::move(parent), stance));
  }

  std::string source_id = posts.front().id;
  if (auto d = optional_string(obj, "detection", origin, source_id)) {
    thread.detection = parse_detection(*d);
    if (!thread.detection) throw CorpusError(origin, source_id, "unknown detection label '" + *d + "'");
  }
  if (auto v = optional_string(obj, "veracity", origin, source_id)) {
    thread.veracity = parse_veracity(*v);
    if (!thread.veracity) throw CorpusError(origin, source_id, "unknown veracity label '" + *v + "'");
    // A veracity label implies the thread is a rumour.
    if (!thread.detection) thread.detection = Detection::Rumour;
  }

  // Reorder so the (single) root comes first; replies keep file order.
  auto root = std::find_if(posts.begin(), posts.end(), [](const Post& p) { return !p.parent; });
  if (root == posts.end()) throw CorpusError(origin, posts.front().id, "no source post (every post has a parent)");
  thread.posts.reserve(posts.size());
  thread.posts.push_back(*root);
  for (auto it = posts.begin(); it != posts.end(); ++it) {
    if (it != root) thread.posts.push_back(std::move(*it));
  }
  validate_thread(thread, origin);
  return thread;
}

ordered_json thread_to_json(const Thread& t) {
  ordered_json obj;
  obj["event"] = t.event;
  obj["detection"] = t.detection ? ordered_json(std::string(to_string(*t.detection))) : ordered_json(nullptr);
  obj["veracity"] = t.veracity ? ordered_json(std::string(to_string(*t.veracity))) : ordered_json(nullptr);
  ordered_json posts = ordered_json::array();
  for (const Post& p : t.posts) {
    ordered_json jp;
    jp["id"] = p.id;
    jp["text"] = p.text;
    jp["parent"] = p.parent ? ordered_json(*p.parent) : ordered_json(nullptr);
    jp["stance"] = p.stance ? ordered_json(std::string(to_string(*p.stance))) : ordered_json(nullptr);
    posts.push_back(std::move(jp));
  }
  obj["posts"] = std::move(posts);
  return obj;
}

json parse_json_text(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw CorpusError(origin, "", std::string("parse failure: ") + e.what());
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorpusError(path.string(), "", "cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

Corpus load_corpus(const fs::path& path) {
  std::vector<Thread> threads;
  if (fs::is_directory(path)) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(path)) {
      if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const fs::path& f : files) {
      threads.push_back(parse_thread(parse_json_text(read_file(f), f.string()), f.string()));
    }
  } else if (fs::is_regular_file(path)) {
    std::istringstream in(read_file(path));
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      std::string origin = path.string() + ":" + std::to_string(line_no);
      threads.push_back(parse_thread(parse_json_text(line, origin), origin));
    }
  } else {
    throw CorpusError(path.string(), "", "no such file or directory");
  }
  return Corpus::from_threads(std::move(threads));
}

void save_corpus(const Corpus& corpus, const fs::path& file) {
  std::string out;
  for (const Thread& t : corpus.threads) {
    out += thread_to_json(t).dump();
    out += '\n';
  }
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  write_text_atomic(file, out);
}

void save_corpus_dir(const Corpus& corpus, const fs::path& dir) {
  fs::create_directories(dir);
  for (std::size_t i = 0; i < corpus.threads.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "%06zu.json", i);
    write_text_atomic(dir / name, thread_to_json(corpus.threads[i]).dump(2) + "\n");
  }
}

std::vector<Branch> decompose_branches(const Thread& thread) {
  const std::size_t n = thread.posts.size();
  std::unordered_map<std::string_view, std::size_t> index;
  for (std::size_t i = 0; i < n; ++i) index.emplace(thread.posts[i].id, i);
  std::vector<std::size_t> parent(n, n);
  std::vector<bool> has_child(n, false);
  for (std::size_t i = 1; i < n; ++i) {
    std::size_t p = index.at(*thread.posts[i].parent);
    parent[i] = p;
    has_child[p] = true;
  }
  std::vector<std::size_t> leaves;
  for (std::size_t i = 0; i < n; ++i) {
    if (!has_child[i]) leaves.push_back(i);
  }
  std::sort(leaves.begin(), leaves.end(),
            [&](std::size_t a, std::size_t b) { return thread.posts[a].id < thread.posts[b].id; });

  std::vector<Branch> branches;
  branches.reserve(leaves.size());
  for (std::size_t leaf : leaves) {
    Branch b;
    for (std::size_t cur = leaf; cur != n; cur = parent[cur]) b.posts.push_back(cur);
    std::reverse(b.posts.begin(), b.posts.end());
    branches.push_back(std::move(b));
  }
  return branches;
}

std::vector<std::string> branch_ids(const Thread& thread, const Branch& branch) {
  std::vector<std::string> ids;
  ids.reserve(branch.posts.size());
  for (std::size_t i : branch.posts) ids.push_back(thread.posts[i].id);
  return ids;
}

std::pair<Corpus, Corpus> split_loeo(const Corpus& corpus, const std::string& held_out) {
  if (std::find(corpus.events.begin(), corpus.events.end(), held_out) == corpus.events.end()) {
    throw ValidationError("unknown event '" + held_out + "'");
  }
  std::vector<Thread> train, test;
  for (const Thread& t : corpus.threads) (t.event == held_out ? test : train).push_back(t);
  if (train.empty()) throw ValidationError("holding out '" + held_out + "' leaves an empty training set");
  return {Corpus::from_threads(std::move(train)), Corpus::from_threads(std::move(test))};
}

Corpus select_events(const Corpus& corpus, std::span<const std::string> events) {
  std::vector<Thread> kept;
  for (const Thread& t : corpus.threads) {
    if (std::find(events.begin(), events.end(), t.event) != events.end()) kept.push_back(t);
  }
  return Corpus::from_threads(std::move(kept));
}

// ---------------------------------------------------------------------------
// Synthetic generator

void SynthSpec::validate() const {
  auto fail = [](const std::string& m) { throw ValidationError("synthetic spec: " + m); };
  if (events < 1) fail("events must be >= 1");
  if (threads_per_event < 1) fail("threads_per_event must be >= 1");
  if (min_branches < 1 || max_branches < min_branches) fail("invalid branch range");
  if (min_depth < 1 || max_depth < min_depth) fail("invalid depth range");
  if (tokens_per_post < 1) fail("tokens_per_post must be >= 1");
  if (pool_size < 1) fail("pool_size must be >= 1");
  if (!(rumour_prior >= 0.0 && rumour_prior <= 1.0)) fail("rumour_prior must lie in [0,1]");
  if (!(coupling >= 0.0 && coupling <= 1.0)) fail("coupling must lie in [0,1]");
  if (!(source_signal >= 0.0 && source_signal <= 1.0)) fail("source_signal must lie in [0,1]");
  double total = 0.0;
  for (double p : veracity_priors) {
    if (!(p >= 0.0) || !std::isfinite(p)) fail("veracity priors must be finite and non-negative");
    total += p;
  }
  if (!(total > 0.0)) fail("veracity priors must have a positive sum");
}

namespace {

// Alphabetic suffix so generated words survive preprocessing.
std::string letters(std::size_t i, std::size_t width) {
  std::string s(width, 'a');
  for (std::size_t k = width; k-- > 0;) {
    s[k] = static_cast<char>('a' + i % 26);
    i /= 26;
  }
  return s;
}

std::string event_name(int e) {
  std::string s;
  int v = e;
  do {
    s.insert(s.begin(), static_cast<char>('a' + v % 26));
    v = v / 26 - 1;
  } while (v >= 0);
  return "event-" + s;
}

struct Pool {
  std::string prefix;
  std::string word(Rng& rng, int size) const { return prefix + letters(rng.index(static_cast<std::size_t>(size)), 2); }
};

// Stance distributions over (comment, deny, query, support).
constexpr std::array<double, 4> kBaseStance{0.45, 0.15, 0.15, 0.25};
constexpr std::array<std::array<double, 4>, 3> kVeracityStance{{
    {0.20, 0.40, 0.30, 0.10},  // false
    {0.25, 0.05, 0.10, 0.60},  // true
    {0.35, 0.10, 0.45, 0.10},  // unverified
}};

const std::array<Pool, 4> kStancePools{{{"cmt"}, {"dny"}, {"qry"}, {"spt"}}};
const std::array<Pool, 3> kVeracityPools{{{"fls"}, {"tru"}, {"unv"}}};
const std::array<Pool, 2> kDetectionPools{{{"nrm"}, {"rmr"}}};
const Pool kNeutralPool{"ntl"};

}  // namespace

Corpus generate_synthetic(const SynthSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(derive_seed(seed, "synthetic"));
  std::vector<Thread> threads;
  threads.reserve(static_cast<std::size_t>(spec.events * spec.threads_per_event));

  for (int e = 0; e < spec.events; ++e) {
    const std::string event = event_name(e);
    const Pool topic{"ev" + letters(static_cast<std::size_t>(e), 2)};
    auto filler = [&](std::string& text) {
      const Pool& pool = rng.bernoulli(0.5) ? topic : kNeutralPool;
      text += ' ';
      text += pool.word(rng, spec.pool_size);
    };

    for (int k = 0; k < spec.threads_per_event; ++k) {
      Thread thread;
      thread.event = event;
      const bool rumour = rng.bernoulli(spec.rumour_prior);
      thread.detection = rumour ? Detection::Rumour : Detection::NonRumour;
      if (rumour) thread.veracity = static_cast<Veracity>(rng.categorical(spec.veracity_priors));

      char prefix[48];
      std::snprintf(prefix, sizeof prefix, "e%03dt%04d", e, k);
      std::size_t next_post = 0;
      auto new_id = [&] {
        char id[64];
        std::snprintf(id, sizeof id, "%sp%03zu", prefix, next_post++);
        return std::string(id);
      };

      // Source post.
      std::string text = kDetectionPools[rumour ? 1 : 0].word(rng, spec.pool_size);
      int used = 1;
      if (rumour && rng.bernoulli(spec.source_signal)) {
        text += ' ';
        text += kVeracityPools[static_cast<std::size_t>(*thread.veracity)].word(rng, spec.pool_size);
        ++used;
      }
      for (; used < spec.tokens_per_post; ++used) filler(text);
      if (rng.bernoulli(0.5)) text = "#" + topic.word(rng, spec.pool_size) + " " + text;
      if (rng.bernoulli(0.5)) text += " http://t.co/" + kNeutralPool.word(rng, spec.pool_size);
      thread.posts.push_back(make_post(new_id(), std::move(text), std::nullopt, Stance::Support));

      std::vector<int> depth{0};
      const int branches = rng.between(spec.min_branches, spec.max_branches);
      for (int b = 0; b < branches; ++b) {
        const int target = rng.between(spec.min_depth, spec.max_depth);
        std::vector<std::size_t> attach;
        for (std::size_t i = 0; i < depth.size(); ++i) {
          if (depth[i] < target) attach.push_back(i);
        }
        std::size_t cur = attach[rng.index(attach.size())];
        while (depth[cur] < target) {
          std::array<double, 4> dist = kBaseStance;
          if (rumour && rng.bernoulli(spec.coupling)) dist = kVeracityStance[static_cast<std::size_t>(*thread.veracity)];
          const auto stance = static_cast<Stance>(rng.categorical(dist));
          const Pool& pool = kStancePools[static_cast<std::size_t>(stance)];
          std::string reply = pool.word(rng, spec.pool_size);
          for (int t = 1; t < spec.tokens_per_post; ++t) {
            if (rng.bernoulli(0.3)) {
              reply += ' ';
              reply += pool.word(rng, spec.pool_size);
            } else {
              filler(reply);
            }
          }
          if (rng.bernoulli(0.1)) reply += " http://t.co/" + kNeutralPool.word(rng, spec.pool_size);
          thread.posts.push_back(make_post(new_id(), std::move(reply), thread.posts[cur].id, stance));
          depth.push_back(depth[cur] + 1);
          cur = thread.posts.size() - 1;
        }
      }
      threads.push_back(std::move(thread));
    }
  }
  return Corpus::from_threads(std::move(threads));
}

}  // namespace rumour
