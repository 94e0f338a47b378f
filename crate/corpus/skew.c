/* Skewed-cost loop: iteration i does work proportional to i*i, so a fixed
 * round-robin split loads workers unevenly while on-demand serving
 * self-balances. No schedule clause: the transpiler's default (dynamic)
 * applies, and a schedule override can force the static variant. */

double w[32];
double total;
double base;
int n = 32;

int main() {
    int i;
    int j;

    base = 0.125;
    total = 0.0;
    for (i = 0; i < n; i++) {
        w[i] = 0.0;
    }

    #pragma omp parallel for private(j) reduction(+: total)
    for (i = 0; i < n; i++) {
        w[i] = 0.0;
        for (j = 0; j < i * i; j++) {
            w[i] = w[i] + base;
        }
        total = total + w[i];
    }

    printf("skew iterator %d total %f\n", i, total);
    printf("last %f\n", w[31]);
    return 0;
}
