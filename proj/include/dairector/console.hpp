#pragma once

#include <cstdio>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>

#include "dairector/session.hpp"

namespace dairector {

struct ConsoleCommand {
  enum class Kind { Platform, Tilt, Quit, Empty, Unknown };
  Kind kind = Kind::Unknown;
  std::optional<std::string> prompt;
};

// "platform", "tilt", "platform: <prompt>", "tilt: <prompt>", "quit".
inline ConsoleCommand parse_console_line(std::string_view line) {
  line = detail::trim(line);
  if (line.empty()) return {ConsoleCommand::Kind::Empty, std::nullopt};
  if (line == "quit") return {ConsoleCommand::Kind::Quit, std::nullopt};
  auto colon = line.find(':');
  auto head = detail::trim(line.substr(0, colon));
  ConsoleCommand cmd;
  if (head == "platform")
    cmd.kind = ConsoleCommand::Kind::Platform;
  else if (head == "tilt")
    cmd.kind = ConsoleCommand::Kind::Tilt;
  else
    return cmd;
  if (colon != std::string_view::npos) {
    auto prompt = detail::trim(line.substr(colon + 1));
    if (!prompt.empty()) cmd.prompt = std::string(prompt);
  }
  return cmd;
}

inline constexpr std::string_view kConsoleHelp =
    "commands: platform | tilt | platform: <prompt> | tilt: <prompt> | quit\n";

inline std::string format_distance(double d) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", d);
  return buf;
}

// Prints one transcript entry. Platform beats are numbered from 1.
inline void print_entry(std::ostream& out, const TranscriptEntry& e, std::size_t beat_number) {
  switch (e.kind) {
    case EntryKind::Platform:
      out << beat_number << ". " << e.text << '\n';
      break;
    case EntryKind::Tilt:
      out << "Tilt: " << e.text << '\n';
      out << "  candidates:\n";
      for (std::size_t i = 0; i < e.tilt->candidates.size(); ++i)
        out << "    " << i + 1 << ". " << e.tilt->candidates[i].name << " ("
            << format_distance(e.tilt->candidates[i].distance) << ")\n";
      for (const auto& f : e.tilt->filtered_out) {
        out << "  filtered: " << f.name << " [";
        for (std::size_t i = 0; i < f.shared.size(); ++i) out << (i ? ", " : "") << f.shared[i];
        out << "]\n";
      }
      break;
    case EntryKind::End:
      out << e.text << '\n';
      break;
  }
  if (e.low_confidence) out << "  (prompt had no known words; low confidence)\n";
}

// Interactive loop over an already-created session. Returns the exit code.
inline int run_console(const Director& director, Session& session, std::istream& in, std::ostream& out,
                       const SessionStore* store = nullptr) {
  std::size_t beats = 0;
  for (const auto& e : session.transcript()) {
    if (e.kind == EntryKind::Platform) ++beats;
    print_entry(out, e, beats);
  }
  if (store) store->save(session);

  std::string line;
  while (std::getline(in, line)) {
    auto cmd = parse_console_line(line);
    using K = ConsoleCommand::Kind;
    if (cmd.kind == K::Empty) continue;
    if (cmd.kind == K::Quit) break;
    if (cmd.kind == K::Unknown) {
      out << kConsoleHelp;
      continue;
    }
    try {
      const auto& e = director.handle_request(session, cmd.kind == K::Platform ? RequestKind::Platform : RequestKind::Tilt,
                                              cmd.prompt);
      if (e.kind == EntryKind::Platform) ++beats;
      print_entry(out, e, beats);
    } catch (const Error& err) {
      out << "error: " << err.what() << '\n';
    }
    if (store) store->save(session);
  }
  out.flush();
  return 0;
}

}  // namespace dairector
