// Copyright 2026 The Gatekit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cstdio>
#include <string>

namespace {

int usage(std::FILE* out) {
    std::fputs(
        "usage: gatekit <command> [options]\n"
        "\n"
        "commands:\n"
        "  dynamics                 gate population dynamics CSV\n"
        "  budget                   itemized error budget table\n"
        "  resonances               motional resonance warnings\n"
        "  rbm gen|run|fit          randomized benchmarking pipeline\n"
        "  gst design|run|fit|report  gate set tomography pipeline\n"
        "  pst run|report           partial Bell-state tomography\n"
        "  selftest                 run the acceptance suite\n"
        "\n"
        "options:\n"
        "  --config <path>   configuration file (defaults built in)\n"
        "  --seed <u64>      root random seed\n"
        "  --out <dir>       output directory for datasets and reports\n"
        "  --shots <n>       shots per circuit override\n"
        "  --backend sim|dataset   counts source for run/fit commands\n",
        out);
    return out == stdout ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) return usage(stderr);
    const std::string cmd = argv[1];
    if (cmd == "--help" || cmd == "-h" || cmd == "help") return usage(stdout);
    std::fprintf(stderr, "gatekit: unknown command '%s'\n", cmd.c_str());
    return usage(stderr);
}
