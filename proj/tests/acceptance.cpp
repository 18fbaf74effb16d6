#include <cstdlib>
#include <iostream>
#include <string>

#include "frankel/acceptance.hpp"

int main(int argc, char** argv) {
    std::vector<int> only;
    for (int i = 1; i < argc; ++i) only.push_back(std::stoi(argv[i]));
    const auto results = frankel::acceptance::run(std::cout, only);
    std::size_t passed = 0;
    for (const auto& c : results) passed += c.passed() ? 1 : 0;
    std::cout << passed << '/' << results.size() << " criteria passed\n";
    return passed == results.size() ? EXIT_SUCCESS : EXIT_FAILURE;
}
