#include <cstdio>

int main() {
    std::puts("qdrl: placeholder");
    return 0;
}
