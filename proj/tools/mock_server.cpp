#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "adaptprobe/commands.hpp"
#include "adaptprobe/mock_server.hpp"
#include "adaptprobe/util.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Scripted OpenAI-compatible chat completion server for offline runs."};
  std::string script_path;
  std::string host = "127.0.0.1";
  int port = 8089;
  app.add_option("--script", script_path, "Response script (JSON)")->required();
  app.add_option("--host", host, "Bind address");
  app.add_option("--port", port, "Port");
  CLI11_PARSE(app, argc, argv);

  return adaptprobe::run_guarded(
      [&] {
        adaptprobe::MockServer server(adaptprobe::json::parse(adaptprobe::read_file(script_path)));
        std::cerr << "mock server on " << host << ":" << port << "\n";
        server.run(host, port);
        return 0;
      },
      std::cerr);
}
