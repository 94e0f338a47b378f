double a[8][8];
double b[8][8];
double s;
int n = 8;

int main() {
    int i;
    int j;
    for (i = 0; i < n; i++) {
        for (j = 0; j < n; j++) {
            a[i][j] = i + j * 0.5;
        }
    }
    s = 0.0;
    #pragma omp parallel for private(j) reduction(+: s)
    for (i = 1; i < n - 1; i++) {
        for (j = 0; j < n; j++) {
            b[i][j] = (a[i - 1][j] + a[i + 1][j]) * 0.5;
            s += b[i][j];
        }
    }
    printf("%f\n", s);
    return 0;
}
