#include "cyclerl/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "cyclerl/errors.hpp"

namespace cyclerl {

namespace {

constexpr char kMagic[8] = {'C', 'Y', 'R', 'L', 'C', 'K', 'P', 'T'};

class Writer {
 public:
  void u64(std::uint64_t v) { raw(&v, sizeof v); }
  void i64(std::int64_t v) { raw(&v, sizeof v); }
  void f64(double v) { raw(&v, sizeof v); }
  void flag(bool b) { u64(b ? 1 : 0); }
  void str(const std::string& s) {
    u64(s.size());
    out_.append(s);
  }
  void doubles(const std::vector<double>& v) {
    u64(v.size());
    raw(v.data(), v.size() * sizeof(double));
  }
  void tensor(const Tensor& t) {
    u64(t.shape().size());
    for (auto d : t.shape()) u64(d);
    u64(t.size());
    raw(t.data().data(), t.size() * sizeof(double));
  }
  void raw(const void* p, std::size_t n) { out_.append(static_cast<const char*>(p), n); }
  [[nodiscard]] std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(const std::string& bytes) : in_(bytes) {}

  std::uint64_t u64() {
    std::uint64_t v;
    raw(&v, sizeof v);
    return v;
  }
  std::int64_t i64() {
    std::int64_t v;
    raw(&v, sizeof v);
    return v;
  }
  double f64() {
    double v;
    raw(&v, sizeof v);
    return v;
  }
  bool flag() { return u64() != 0; }
  std::string str() {
    const auto n = checked_size(u64(), 1);
    std::string s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::vector<double> doubles() {
    std::vector<double> v(checked_size(u64(), sizeof(double)));
    raw(v.data(), v.size() * sizeof(double));
    return v;
  }
  Tensor tensor() {
    std::vector<std::size_t> shape(checked_size(u64(), sizeof(std::uint64_t)));
    for (auto& d : shape) d = u64();
    std::vector<double> data(checked_size(u64(), sizeof(double)));
    raw(data.data(), data.size() * sizeof(double));
    return Tensor(std::move(shape), std::move(data));
  }
  void raw(void* p, std::size_t n) {
    if (pos_ + n > in_.size()) throw DataError("checkpoint truncated");
    std::memcpy(p, in_.data() + pos_, n);
    pos_ += n;
  }
  [[nodiscard]] bool at_end() const { return pos_ == in_.size(); }

 private:
  std::size_t checked_size(std::uint64_t n, std::size_t unit) const {
    if (n > (in_.size() - pos_) / unit) throw DataError("checkpoint field length exceeds remaining data");
    return static_cast<std::size_t>(n);
  }

  const std::string& in_;
  std::size_t pos_ = 0;
};

void write_network(Writer& w, const MlpNetwork& net) {
  w.u64(net.layer_count());
  for (const auto& l : net.layers()) {
    w.u64(l.activation == Activation::relu ? 0 : 1);
    w.tensor(l.weight);
    w.tensor(l.bias);
  }
}

MlpNetwork read_network(Reader& r) {
  std::vector<DenseLayer> layers(r.u64());
  for (auto& l : layers) {
    l.activation = r.u64() == 0 ? Activation::relu : Activation::identity;
    l.weight = r.tensor();
    l.bias = r.tensor();
  }
  return MlpNetwork(std::move(layers));
}

void write_optimizer(Writer& w, const AdamState& a) {
  w.f64(a.options.learning_rate);
  w.f64(a.options.beta1);
  w.f64(a.options.beta2);
  w.f64(a.options.epsilon);
  w.u64(a.t);
  w.u64(a.m.size());
  for (std::size_t p = 0; p < a.m.size(); ++p) {
    w.tensor(a.m[p]);
    w.tensor(a.v[p]);
  }
}

AdamState read_optimizer(Reader& r) {
  AdamState a;
  a.options.learning_rate = r.f64();
  a.options.beta1 = r.f64();
  a.options.beta2 = r.f64();
  a.options.epsilon = r.f64();
  a.t = r.u64();
  const auto n = r.u64();
  for (std::uint64_t p = 0; p < n; ++p) {
    a.m.push_back(r.tensor());
    a.v.push_back(r.tensor());
  }
  return a;
}

void write_replay(Writer& w, const RingBuffer& b) {
  w.u64(b.capacity());
  w.u64(b.cursor());
  w.u64(b.slots().size());
  for (const auto& t : b.slots()) {
    w.doubles(t.state);
    w.i64(t.action);
    w.f64(t.reward);
    w.doubles(t.next_state);
    w.flag(t.done);
    w.i64(t.task_id);
  }
}

RingBuffer read_replay(Reader& r) {
  const auto capacity = r.u64();
  const auto cursor = r.u64();
  std::vector<Transition> slots(r.u64());
  for (auto& t : slots) {
    t.state = r.doubles();
    t.action = static_cast<int>(r.i64());
    t.reward = r.f64();
    t.next_state = r.doubles();
    t.done = r.flag();
    t.task_id = static_cast<int>(r.i64());
  }
  return RingBuffer(CircularStore<Transition>::restore(capacity, std::move(slots), cursor));
}

void write_rehearsal(Writer& w, const RehearsalBuffer& b) {
  w.u64(b.capacity());
  w.u64(b.cursor());
  w.u64(b.slots().size());
  for (const auto& e : b.slots()) {
    w.doubles(e.state);
    w.doubles(e.q_values);
    w.i64(e.task_id);
  }
}

RehearsalBuffer read_rehearsal(Reader& r) {
  const auto capacity = r.u64();
  const auto cursor = r.u64();
  std::vector<RehearsalEntry> slots(r.u64());
  for (auto& e : slots) {
    e.state = r.doubles();
    e.q_values = r.doubles();
    e.task_id = static_cast<int>(r.i64());
  }
  return RehearsalBuffer(CircularStore<RehearsalEntry>::restore(capacity, std::move(slots), cursor));
}

template <typename F>
std::string encode_with(F&& f) {
  Writer w;
  f(w);
  return w.take();
}

}  // namespace

std::string encode_network(const MlpNetwork& net) {
  return encode_with([&](Writer& w) { write_network(w, net); });
}
std::string encode_optimizer(const AdamState& adam) {
  return encode_with([&](Writer& w) { write_optimizer(w, adam); });
}
std::string encode_replay(const RingBuffer& buffer) {
  return encode_with([&](Writer& w) { write_replay(w, buffer); });
}
std::string encode_rehearsal(const RehearsalBuffer& rrb) {
  return encode_with([&](Writer& w) { write_rehearsal(w, rrb); });
}

std::string encode_state(const TrainerState& s, std::uint64_t seed) {
  Writer w;
  w.raw(kMagic, sizeof kMagic);
  w.u64(kCheckpointVersion);
  w.u64(seed);
  w.u64(s.global_step);
  w.u64(s.next_phase);
  w.str(rng_state(s.rng));
  write_network(w, s.agent.online());
  write_network(w, s.agent.target());
  write_optimizer(w, s.agent.optimizer());
  write_replay(w, s.buffer);
  write_rehearsal(w, s.rrb);
  const auto& anchor = s.agent.anchor();
  w.flag(anchor.has_value());
  if (anchor) {
    w.f64(anchor->coefficient);
    w.u64(anchor->anchor.size());
    for (const auto& t : anchor->anchor) w.tensor(t);
    w.u64(anchor->fisher.size());
    for (const auto& t : anchor->fisher) w.tensor(t);
  }
  w.u64(s.probe_states.size());
  for (const auto& p : s.probe_states) w.doubles(p);
  w.str(to_json(s.log).dump());
  return w.take();
}

std::uint64_t decode_state(const std::string& bytes, TrainerState& s) {
  Reader r(bytes);
  char magic[sizeof kMagic];
  r.raw(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof kMagic) != 0) throw DataError("not a cyclerl checkpoint");
  const auto version = r.u64();
  if (version != kCheckpointVersion) {
    throw DataError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto seed = r.u64();
  s.global_step = r.u64();
  s.next_phase = r.u64();
  restore_rng_state(s.rng, r.str());
  s.agent.online() = read_network(r);
  s.agent.target() = read_network(r);
  s.agent.optimizer() = read_optimizer(r);
  s.buffer = read_replay(r);
  s.rrb = read_rehearsal(r);
  if (r.flag()) {
    FisherState anchor;
    anchor.coefficient = r.f64();
    for (auto n = r.u64(); n > 0; --n) anchor.anchor.push_back(r.tensor());
    for (auto n = r.u64(); n > 0; --n) anchor.fisher.push_back(r.tensor());
    s.agent.set_anchor(std::move(anchor));
  } else {
    s.agent.set_anchor(std::nullopt);
  }
  s.probe_states.clear();
  for (auto n = r.u64(); n > 0; --n) s.probe_states.push_back(r.doubles());
  s.log = runlog_from_json(nlohmann::json::parse(r.str()));
  if (!r.at_end()) throw DataError("trailing bytes after checkpoint");
  return seed;
}

void ContinualTrainer::save_checkpoint(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open checkpoint for writing: " + path);
  const std::string bytes = encode_state(state_, seed_);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing checkpoint: " + path);
}

ContinualTrainer ContinualTrainer::load_checkpoint(const std::string& path, RunConfig config) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string bytes = ss.str();
  // The seed sits right after the magic and version words.
  std::uint64_t seed = 0;
  if (bytes.size() < sizeof kMagic + 2 * sizeof(std::uint64_t)) throw DataError("checkpoint truncated");
  std::memcpy(&seed, bytes.data() + sizeof kMagic + sizeof(std::uint64_t), sizeof seed);
  ContinualTrainer trainer(std::move(config), seed);
  const std::size_t expected_inputs = trainer.state_.agent.online().input_dim();
  decode_state(bytes, trainer.state_);
  if (trainer.state_.agent.online().input_dim() != expected_inputs) {
    throw DataError("checkpoint does not match the configured network");
  }
  return trainer;
}

}  // namespace cyclerl
