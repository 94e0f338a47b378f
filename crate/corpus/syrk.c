/* Symmetric rank-k update: C = beta*C + alpha*A*A^T. */

double A[24][24];
double C[24][24];
double alpha;
double beta;
int n = 24;

int main() {
    int i;
    int j;
    int k;
    double cs;

    alpha = 0.5;
    beta = 1.5;
    for (i = 0; i < n; i++) {
        for (j = 0; j < n; j++) {
            A[i][j] = ((i * 5 + j * 2) % 9) * 0.25;
            C[i][j] = ((i + j * 3) % 4) * 0.5;
        }
    }

    #pragma omp parallel for private(j, k) schedule(dynamic, 1)
    for (i = 0; i < n; i++) {
        for (j = 0; j < n; j++) {
            C[i][j] = C[i][j] * beta;
            for (k = 0; k < n; k++) {
                C[i][j] = C[i][j] + alpha * A[i][k] * A[j][k];
            }
        }
    }

    cs = 0.0;
    for (i = 0; i < n; i++) {
        for (j = 0; j < n; j++) {
            cs = cs + C[i][j] * ((3 * i + j) % 8 + 1);
        }
    }
    printf("syrk checksum %f\n", cs);
    printf("diag %f %f\n", C[0][0], C[23][23]);
    return 0;
}
