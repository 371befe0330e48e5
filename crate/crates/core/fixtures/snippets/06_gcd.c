#include <stdio.h>

static int gcd(int a, int b) {
    while (b != 0) {
        int t = a % b;
        a = b;
        b = t;
    }
    return a;
}

int main(void) {
    int x = 84, y = 36;
    printf("gcd(%d, %d) = %d\n", x, y, gcd(x, y));
    return gcd(x, 9) - 3;
}
