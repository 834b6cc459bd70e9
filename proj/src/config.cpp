#include "haec/config.hpp"

#include <fstream>
#include <sstream>

namespace haec {
namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return {};
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

double to_double(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(value, &used);
  } catch (const std::exception&) {
    throw ConfigError("config: '" + key + "' expects a number, got '" + value + "'");
  }
  if (used != value.size()) throw ConfigError("config: '" + key + "' expects a number, got '" + value + "'");
  return v;
}

Index to_index(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(value, &used);
  } catch (const std::exception&) {
    throw ConfigError("config: '" + key + "' expects an integer, got '" + value + "'");
  }
  if (used != value.size()) throw ConfigError("config: '" + key + "' expects an integer, got '" + value + "'");
  return static_cast<Index>(v);
}

}  // namespace

MaskMode parse_mask_mode(const std::string& name) {
  if (name == "network") return MaskMode::Network;
  if (name == "oracle" || name == "ones") return MaskMode::Ones;
  if (name == "zeros") return MaskMode::Zeros;
  throw ConfigError("config: unknown mask_mode '" + name + "'");
}

std::string to_string(MaskMode mode) {
  switch (mode) {
    case MaskMode::Network: return "network";
    case MaskMode::Ones: return "ones";
    case MaskMode::Zeros: return "zeros";
    case MaskMode::External: return "external";
  }
  return "network";
}

void apply_config_entry(PipelineConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "sample_rate") cfg.stft.sample_rate = to_double(key, value);
  else if (key == "frame_len") cfg.stft.frame_len = to_index(key, value);
  else if (key == "hop") cfg.stft.hop = to_index(key, value);
  else if (key == "fb_length") cfg.fb_length = to_index(key, value);
  else if (key == "fb_subbands") cfg.fb_subbands = to_index(key, value);
  else if (key == "fb_decimation") cfg.fb_decimation = to_index(key, value);
  else if (key == "fb_kaiser_beta") cfg.fb_kaiser_beta = to_double(key, value);
  else if (key == "lec_filter_lengths") {
    cfg.lec.filter_lengths.clear();
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) cfg.lec.filter_lengths.push_back(static_cast<int>(to_index(key, trim(item))));
  } else if (key == "lec_mu0") cfg.lec.mu0 = to_double(key, value);
  else if (key == "lec_delta0") cfg.lec.delta0 = to_double(key, value);
  else if (key == "lec_beta") cfg.lec.beta = to_double(key, value);
  else if (key == "lec_time_constant") cfg.lec.time_constant = to_double(key, value);
  else if (key == "lec_mu_min") cfg.lec.mu_min = to_double(key, value);
  else if (key == "bark_bands") cfg.bark_bands = to_index(key, value);
  else if (key == "log_floor") cfg.log_floor = to_double(key, value);
  else if (key == "mask_mode") cfg.mask_mode = parse_mask_mode(value);
  else if (key == "weights") cfg.weights_path = value;
  else throw ConfigError("config: unknown key '" + key + "'");
}

PipelineConfig parse_config(const std::string& text, PipelineConfig base) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key=value");
    apply_config_entry(base, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  base.lec.frame_rate = base.stft.frame_rate();
  base.validate();
  return base;
}

PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

std::string format_config(const PipelineConfig& cfg) {
  std::ostringstream os;
  os << "sample_rate=" << cfg.stft.sample_rate << '\n'
     << "frame_len=" << cfg.stft.frame_len << '\n'
     << "hop=" << cfg.stft.hop << '\n'
     << "fb_length=" << cfg.fb_length << '\n'
     << "fb_subbands=" << cfg.fb_subbands << '\n'
     << "fb_decimation=" << cfg.fb_decimation << '\n'
     << "fb_kaiser_beta=" << cfg.fb_kaiser_beta << '\n'
     << "lec_filter_lengths=";
  for (std::size_t i = 0; i < cfg.lec.filter_lengths.size(); ++i)
    os << (i ? "," : "") << cfg.lec.filter_lengths[i];
  os << '\n'
     << "lec_mu0=" << cfg.lec.mu0 << '\n'
     << "lec_delta0=" << cfg.lec.delta0 << '\n'
     << "lec_beta=" << cfg.lec.beta << '\n'
     << "lec_time_constant=" << cfg.lec.time_constant << '\n'
     << "lec_mu_min=" << cfg.lec.mu_min << '\n'
     << "bark_bands=" << cfg.bark_bands << '\n'
     << "log_floor=" << cfg.log_floor << '\n'
     << "mask_mode=" << to_string(cfg.mask_mode) << '\n';
  if (!cfg.weights_path.empty()) os << "weights=" << cfg.weights_path << '\n';
  return os.str();
}

}  // namespace haec
