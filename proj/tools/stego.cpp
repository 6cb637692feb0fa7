// CLI entry point; subcommands are filled in alongside the library modules.
#include <cstdio>

int main() {
  std::puts("stego: not wired up yet");
  return 2;
}
