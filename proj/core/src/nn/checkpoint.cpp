#include "parallax/nn/checkpoint.hpp"
#include "parallax/io.hpp"

#include <nlohmann/json.hpp>

namespace parallax::nn {

namespace fs = std::filesystem;

namespace {

template <typename T> constexpr char const *dtype_name() { return std::is_same_v<T, float> ? "float32" : "float64"; }

template <typename T> void write_real(fs::path const &path, Tensor<T> const &t)
{
  ComplexTensorF c(t.rank() == 0 ? Shape{1} : t.shape());
  for (Index i = 0; i < t.size(); i++) { c[i] = Cxf(static_cast<float>(t[i]), 0.0f); }
  io::write_cfl(path, c);
}

template <typename T> Tensor<T> read_real(fs::path const &path, Shape const &shape)
{
  auto const c = io::read_cfl<float>(path);
  if (c.size() != shape_size(shape)) {
    fail(ErrorCategory::ShapeMismatch, path.string() + " holds " + std::to_string(c.size()) + " values, expected " +
                                         shape_string(shape));
  }
  Tensor<T> t(shape);
  for (Index i = 0; i < t.size(); i++) { t[i] = static_cast<T>(c[i].real()); }
  return t;
}

} // namespace

template <typename T> void save_checkpoint(fs::path const &dir, Model<T> const &model, std::uint64_t seed, int epoch)
{
  fs::create_directories(dir);
  nlohmann::ordered_json j;
  j["format"] = "parallax-checkpoint-1";
  j["dtype"] = dtype_name<T>();
  j["seed"] = seed;
  j["epoch"] = epoch;
  j["init_scheme"] = model.store().init_scheme;
  j["config"] = nlohmann::ordered_json::parse(model.config().to_json());
  auto params = nlohmann::ordered_json::array();
  for (auto const &p : model.store().params()) {
    auto const value_file = "params/" + p.name;
    auto const state_file = "state/" + p.name;
    write_real(dir / value_file, p.value);
    write_real(dir / state_file, p.accum);
    nlohmann::ordered_json e;
    e["name"] = p.name;
    e["shape"] = p.value.shape();
    e["dtype"] = "float32";
    e["file"] = value_file;
    e["optimizer_state"] = {{"rmsprop_accumulator", state_file}};
    params.push_back(std::move(e));
  }
  j["params"] = std::move(params);
  io::write_text(dir / "checkpoint.json", j.dump(2) + "\n");
}

template <typename T> Model<T> load_checkpoint(fs::path const &dir, CheckpointInfo *info)
{
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(io::read_text(dir / "checkpoint.json"));
  } catch (nlohmann::json::exception const &e) {
    fail(ErrorCategory::MalformedHeader, (dir / "checkpoint.json").string() + ": " + e.what());
  }
  ParamStore<T> store;
  ModelConfig cfg;
  try {
    cfg = ModelConfig::from_json(j.at("config").dump());
    store.init_scheme = j.value("init_scheme", std::string{"he_normal"});
    for (auto const &e : j.at("params")) {
      auto const shape = e.at("shape").get<Shape>();
      auto const idx = store.add(e.at("name").get<std::string>(), read_real<T>(dir / e.at("file").get<std::string>(), shape));
      auto const &st = e.at("optimizer_state");
      if (st.contains("rmsprop_accumulator")) {
        store[idx].accum = read_real<T>(dir / st.at("rmsprop_accumulator").get<std::string>(), shape);
      }
    }
    if (info) {
      info->seed = j.at("seed").get<std::uint64_t>();
      info->epoch = j.at("epoch").get<int>();
      info->dtype = j.at("dtype").get<std::string>();
    }
  } catch (nlohmann::json::exception const &e) {
    fail(ErrorCategory::MalformedHeader, (dir / "checkpoint.json").string() + ": " + e.what());
  }
  return Model<T>(cfg, std::move(store));
}

template void save_checkpoint(fs::path const &, Model<float> const &, std::uint64_t, int);
template void save_checkpoint(fs::path const &, Model<double> const &, std::uint64_t, int);
template Model<float> load_checkpoint(fs::path const &, CheckpointInfo *);
template Model<double> load_checkpoint(fs::path const &, CheckpointInfo *);

} // namespace parallax::nn
