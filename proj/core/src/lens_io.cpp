#include "aberray/lens_io.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "aberray/error.hpp"

namespace aberray {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_number(std::string_view text, std::size_t line, const std::string& field) {
  if (text == "inf" || text == "Infinity" || text == "infinity") return 0.0;
  double value = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty())
    throw ParseError(line, field, "expected a number, got '" + std::string(text) + "'");
  return value;
}

std::string format_number(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

Surface parse_surface(std::string_view rest, std::size_t line, std::size_t expected_index) {
  std::istringstream in{std::string(rest)};
  std::string index_token;
  in >> index_token;
  std::size_t index = 0;
  {
    const auto [ptr, ec] =
        std::from_chars(index_token.data(), index_token.data() + index_token.size(), index);
    if (ec != std::errc() || ptr != index_token.data() + index_token.size())
      throw ParseError(line, "index", "expected a surface index, got '" + index_token + "'");
  }
  if (index != expected_index)
    throw ParseError(line, "index",
                     "surfaces must be numbered consecutively from 1; expected " +
                         std::to_string(expected_index));

  std::map<std::string, std::string> fields;
  std::string token;
  while (in >> token) {
    const auto eq = token.find('=');
    if (eq == std::string::npos || eq == 0)
      throw ParseError(line, token, "expected key=value");
    const std::string key = token.substr(0, eq);
    if (!fields.emplace(key, token.substr(eq + 1)).second)
      throw ParseError(line, key, "duplicate field");
  }

  auto take = [&](const std::string& key) -> std::optional<std::string> {
    auto it = fields.find(key);
    if (it == fields.end()) return std::nullopt;
    std::string v = it->second;
    fields.erase(it);
    return v;
  };
  auto require = [&](const std::string& key) {
    auto v = take(key);
    if (!v) throw ParseError(line, key, "missing required field");
    return *v;
  };

  Surface s;
  const std::string kind = require("kind");
  if (kind == "sphere") {
    s.kind = SurfaceKind::kSphere;
  } else if (kind == "asphere") {
    s.kind = SurfaceKind::kAsphere;
  } else if (kind == "aper" || kind == "stop") {
    s.kind = SurfaceKind::kApertureStop;
  } else {
    throw ParseError(line, "kind", "unknown surface kind '" + kind + "'");
  }
  if (auto r = take("radius")) s.radius = parse_number(*r, line, "radius");
  s.thickness = parse_number(require("thickness"), line, "thickness");
  s.semi_diameter = parse_number(require("semi_diameter"), line, "semi_diameter");
  if (auto c = take("conic")) s.conic = parse_number(*c, line, "conic");
  for (std::size_t i = 0; i < kAsphereOrders.size(); ++i) {
    const std::string key = "a" + std::to_string(kAsphereOrders[i]);
    if (auto a = take(key)) s.aspheric[i] = parse_number(*a, line, key);
  }

  auto n = take("n");
  auto v = take("V");
  auto glass = take("glass");
  if (n || v) {
    if (!n) throw ParseError(line, "n", "V given without n");
    if (!v) throw ParseError(line, "V", "n given without V");
    Material m;
    m.refractive_index_d = parse_number(*n, line, "n");
    m.abbe_number = parse_number(*v, line, "V");
    if (glass) m.name = *glass;
    s.material_after = m;
  } else if (glass) {
    throw ParseError(line, "glass", "glass name given without n/V");
  }

  if (!fields.empty()) throw ParseError(line, fields.begin()->first, "unknown field");
  return s;
}

}  // namespace

LensPrescription parse_prescription(std::string_view document) {
  LensPrescription lens;
  std::optional<double> sensor_distance;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= document.size()) {
    const auto nl = document.find('\n', pos);
    const std::string_view raw =
        document.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? document.size() + 1 : nl + 1;
    ++line_no;

    const std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') continue;

    if (line.starts_with("surf ") || line.starts_with("surf\t")) {
      lens.surfaces.push_back(parse_surface(line.substr(5), line_no, lens.surfaces.size() + 1));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ParseError(line_no, std::string(line), "expected key=value or a surf line");
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    if (key == "name") {
      lens.name = value;
    } else if (key == "sensor_width_mm") {
      lens.sensor_width_mm = parse_number(value, line_no, key);
    } else if (key == "sensor_height_mm") {
      lens.sensor_height_mm = parse_number(value, line_no, key);
    } else if (key == "sensor_distance_mm") {
      sensor_distance = parse_number(value, line_no, key);
    } else if (key == "design_wavelength_nm") {
      lens.design_wavelength_nm = parse_number(value, line_no, key);
    } else if (key == "dispersion") {
      if (value == "none") {
        lens.dispersion = Dispersion::kNone;
      } else if (value == "abbe") {
        lens.dispersion = Dispersion::kAbbeLinear;
      } else {
        throw ParseError(line_no, key, "expected 'none' or 'abbe'");
      }
    } else {
      throw ParseError(line_no, key, "unknown header key");
    }
  }

  if (lens.surfaces.empty()) throw ValidationError("lens file contains no surfaces");
  // The tabulated final thickness is the infinity-focus sensor distance.
  lens.sensor_distance_mm = sensor_distance.value_or(lens.surfaces.back().thickness);
  lens.validate();
  return lens;
}

LensPrescription load_prescription(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open lens file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_prescription(buffer.str());
}

std::string serialize_prescription(const LensPrescription& lens) {
  std::ostringstream out;
  out << "name=" << lens.name << '\n'
      << "sensor_width_mm=" << format_number(lens.sensor_width_mm) << '\n'
      << "sensor_height_mm=" << format_number(lens.sensor_height_mm) << '\n'
      << "sensor_distance_mm=" << format_number(lens.sensor_distance_mm) << '\n'
      << "design_wavelength_nm=" << format_number(lens.design_wavelength_nm) << '\n';
  if (lens.dispersion == Dispersion::kAbbeLinear) out << "dispersion=abbe\n";
  for (std::size_t i = 0; i < lens.surfaces.size(); ++i) {
    const Surface& s = lens.surfaces[i];
    out << "surf " << (i + 1) << " kind=" << to_string(s.kind)
        << " radius=" << (s.planar() ? std::string("inf") : format_number(s.radius))
        << " thickness=" << format_number(s.thickness)
        << " semi_diameter=" << format_number(s.semi_diameter);
    if (s.material_after) {
      out << " n=" << format_number(s.material_after->refractive_index_d)
          << " V=" << format_number(s.material_after->abbe_number);
      if (!s.material_after->name.empty()) out << " glass=" << s.material_after->name;
    }
    if (s.conic != 0.0) out << " conic=" << format_number(s.conic);
    if (s.kind == SurfaceKind::kAsphere) {
      for (std::size_t k = 0; k < kAsphereOrders.size(); ++k)
        out << " a" << kAsphereOrders[k] << '=' << format_number(s.aspheric[k]);
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace aberray
