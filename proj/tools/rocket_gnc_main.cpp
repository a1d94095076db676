#include <cstdio>

int main() {
  std::puts("rocket-gnc: subcommands not wired up yet");
  return 1;
}
