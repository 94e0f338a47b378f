/* Symmetric rank-2k update: C = beta*C + alpha*A*B^T + alpha*B*A^T. */

double A[20][20];
double B[20][20];
double C[20][20];
double alpha;
double beta;
int n = 20;

int main() {
    int i;
    int j;
    int k;
    double cs;

    alpha = 0.25;
    beta = 0.75;
    for (i = 0; i < n; i++) {
        for (j = 0; j < n; j++) {
            A[i][j] = ((i * 2 + j) % 7) * 0.5;
            B[i][j] = ((i + j * 4) % 5) * 0.25;
            C[i][j] = ((i * 3 + j * 2) % 6) * 0.5;
        }
    }

    #pragma omp parallel for private(j, k) schedule(dynamic, 2)
    for (i = 0; i < n; i++) {
        for (j = 0; j < n; j++) {
            C[i][j] = C[i][j] * beta;
            for (k = 0; k < n; k++) {
                C[i][j] = C[i][j] + alpha * A[i][k] * B[j][k] + alpha * B[i][k] * A[j][k];
            }
        }
    }

    cs = 0.0;
    for (i = 0; i < n; i++) {
        for (j = 0; j < n; j++) {
            cs = cs + C[i][j] * ((i + 5 * j) % 7 + 1);
        }
    }
    printf("syr2k checksum %f\n", cs);
    printf("probe %f %f\n", C[2][17], C[19][0]);
    return 0;
}
