/* Master/worker MPI translation of stencil_in.c (generated; do not edit). */
#include <stdio.h>
#include <mpi.h>

static long omp2dm_imin(long a, long b) { return a < b ? a : b; }
static long omp2dm_imax(long a, long b) { return a > b ? a : b; }

double a[8][8];
double b[8][8];
double s;
int n = 8;

int main(int argc, char **argv)
{
    int i = 0;
    int j = 0;
    int _dm_rank = 0;
    int _dm_size = 0;
    int _dm_hdr[2] = {0};
    int _dm_ret = 0;
    int _dm_tag = 0;
    int _dm_src = 0;
    int _dm_first = 0;
    int _dm_bound = 0;
    int _dm_trip = 0;
    int _dm_chunk = 0;
    int _dm_nchunks = 0;
    int _dm_next = 0;
    int _dm_done = 0;
    int _dm_w = 0;
    int _dm_last = 0;
    int _dm_row0 = 0;
    int _dm_rows = 0;
    int _dm_k = 0;
    double _dm_acc_s = 0;
    double _dm_part_s = 0;
    MPI_Status _dm_status;

    MPI_Init(&argc, &argv);
    MPI_Comm_rank(MPI_COMM_WORLD, &_dm_rank);
    MPI_Comm_size(MPI_COMM_WORLD, &_dm_size);
    if (_dm_size < 2) {
        fprintf(stderr, "this program needs at least 2 MPI processes\n");
        MPI_Finalize();
        return 1;
    }

    if (_dm_rank == 0) {
        for (i = 0; i < n; i++) {
            for (j = 0; j < n; j++) {
                a[i][j] = i + j * 0.5;
            }
        }
        s = 0.0;
        /* block 0: distribute `for (i ...)` (dynamic schedule) */
        _dm_first = 1;
        _dm_bound = n - 1;
        if (_dm_bound > _dm_first) {
            _dm_trip = _dm_bound - _dm_first;
        } else {
            _dm_trip = 0;
        }
        if (_dm_trip > 0) {
            _dm_chunk = (_dm_trip + (_dm_size - 1) * 10 - 1) / ((_dm_size - 1) * 10);
            if (_dm_chunk < 1) {
                _dm_chunk = 1;
            }
            _dm_nchunks = (_dm_trip + _dm_chunk - 1) / _dm_chunk;
            _dm_acc_s = 0.0;
            _dm_next = 0;
            while (_dm_next < _dm_nchunks && _dm_next < _dm_size - 1) {
                _dm_hdr[0] = _dm_first + _dm_next * _dm_chunk;
                _dm_hdr[1] = omp2dm_imin(_dm_chunk, _dm_trip - _dm_next * _dm_chunk);
                MPI_Send(_dm_hdr, 2, MPI_INT, _dm_next + 1, 0, MPI_COMM_WORLD); /* work(block 0) */
                MPI_Send(&n, 1, MPI_INT, _dm_next + 1, 19, MPI_COMM_WORLD); /* data_in(n) */
                _dm_last = _dm_hdr[0] + (_dm_hdr[1] - 1);
                _dm_row0 = omp2dm_imax(0, omp2dm_imin(7, _dm_hdr[0] - 1));
                _dm_rows = omp2dm_imax(0, omp2dm_imax(0, omp2dm_imin(7, _dm_last + 1)) - _dm_row0 + 1);
                MPI_Send(&a[_dm_row0][0], _dm_rows * 8, MPI_DOUBLE, _dm_next + 1, 1, MPI_COMM_WORLD); /* data_in(a) */
                _dm_row0 = omp2dm_imax(0, omp2dm_imin(7, _dm_hdr[0]));
                _dm_rows = omp2dm_imax(0, omp2dm_imax(0, omp2dm_imin(7, _dm_last)) - _dm_row0 + 1);
                MPI_Send(&b[_dm_row0][0], _dm_rows * 8, MPI_DOUBLE, _dm_next + 1, 7, MPI_COMM_WORLD); /* data_in(b) */
                _dm_next += 1;
            }
            _dm_done = 0;
            while (_dm_done < _dm_nchunks) {
                MPI_Recv(_dm_hdr, 2, MPI_INT, MPI_ANY_SOURCE, 0, MPI_COMM_WORLD, &_dm_status); /* work(block 0) */
                _dm_src = _dm_status.MPI_SOURCE;
                _dm_last = _dm_hdr[0] + (_dm_hdr[1] - 1);
                _dm_row0 = omp2dm_imax(0, omp2dm_imin(7, _dm_hdr[0]));
                _dm_rows = omp2dm_imax(0, omp2dm_imax(0, omp2dm_imin(7, _dm_last)) - _dm_row0 + 1);
                MPI_Recv(&b[_dm_row0][0], _dm_rows * 8, MPI_DOUBLE, _dm_src, 8, MPI_COMM_WORLD, &_dm_status); /* result(b) */
                MPI_Recv(&_dm_part_s, 1, MPI_DOUBLE, _dm_src, 15, MPI_COMM_WORLD, &_dm_status); /* reduce(s) */
                _dm_acc_s += _dm_part_s;
                _dm_done += 1;
                if (_dm_next < _dm_nchunks) {
                    _dm_hdr[0] = _dm_first + _dm_next * _dm_chunk;
                    _dm_hdr[1] = omp2dm_imin(_dm_chunk, _dm_trip - _dm_next * _dm_chunk);
                    MPI_Send(_dm_hdr, 2, MPI_INT, _dm_src, 0, MPI_COMM_WORLD); /* work(block 0) */
                    MPI_Send(&n, 1, MPI_INT, _dm_src, 19, MPI_COMM_WORLD); /* data_in(n) */
                    _dm_last = _dm_hdr[0] + (_dm_hdr[1] - 1);
                    _dm_row0 = omp2dm_imax(0, omp2dm_imin(7, _dm_hdr[0] - 1));
                    _dm_rows = omp2dm_imax(0, omp2dm_imax(0, omp2dm_imin(7, _dm_last + 1)) - _dm_row0 + 1);
                    MPI_Send(&a[_dm_row0][0], _dm_rows * 8, MPI_DOUBLE, _dm_src, 1, MPI_COMM_WORLD); /* data_in(a) */
                    _dm_row0 = omp2dm_imax(0, omp2dm_imin(7, _dm_hdr[0]));
                    _dm_rows = omp2dm_imax(0, omp2dm_imax(0, omp2dm_imin(7, _dm_last)) - _dm_row0 + 1);
                    MPI_Send(&b[_dm_row0][0], _dm_rows * 8, MPI_DOUBLE, _dm_src, 7, MPI_COMM_WORLD); /* data_in(b) */
                    _dm_next += 1;
                }
            }
            s += _dm_acc_s;
        }
        i = _dm_first + _dm_trip;
        printf("%f\n", s);
        /* all parallel work done; release the workers */
        _dm_w = 1;
        while (_dm_w < _dm_size) {
            MPI_Send(_dm_hdr, 2, MPI_INT, _dm_w, 5, MPI_COMM_WORLD); /* terminate_all */
            _dm_w += 1;
        }
        _dm_ret = 0;
    } else {
        while (1) {
            MPI_Recv(_dm_hdr, 2, MPI_INT, 0, MPI_ANY_TAG, MPI_COMM_WORLD, &_dm_status);
            _dm_tag = _dm_status.MPI_TAG;
            if (_dm_tag == 5) {
                break;
            }
            if (_dm_tag == 0) {
                MPI_Recv(&n, 1, MPI_INT, 0, 19, MPI_COMM_WORLD, &_dm_status); /* data_in(n) */
                _dm_last = _dm_hdr[0] + (_dm_hdr[1] - 1);
                _dm_row0 = omp2dm_imax(0, omp2dm_imin(7, _dm_hdr[0] - 1));
                _dm_rows = omp2dm_imax(0, omp2dm_imax(0, omp2dm_imin(7, _dm_last + 1)) - _dm_row0 + 1);
                MPI_Recv(&a[_dm_row0][0], _dm_rows * 8, MPI_DOUBLE, 0, 1, MPI_COMM_WORLD, &_dm_status); /* data_in(a) */
                _dm_row0 = omp2dm_imax(0, omp2dm_imin(7, _dm_hdr[0]));
                _dm_rows = omp2dm_imax(0, omp2dm_imax(0, omp2dm_imin(7, _dm_last)) - _dm_row0 + 1);
                MPI_Recv(&b[_dm_row0][0], _dm_rows * 8, MPI_DOUBLE, 0, 7, MPI_COMM_WORLD, &_dm_status); /* data_in(b) */
                s = 0.0;
                {
                    i = _dm_hdr[0];
                    _dm_k = 0;
                    while (_dm_k < _dm_hdr[1]) {
                        for (j = 0; j < n; j++) {
                            b[i][j] = (a[i - 1][j] + a[i + 1][j]) * 0.5;
                            s += b[i][j];
                        }
                        i += 1;
                        _dm_k += 1;
                    }
                }
                MPI_Send(_dm_hdr, 2, MPI_INT, 0, 0, MPI_COMM_WORLD); /* work(block 0) */
                _dm_row0 = omp2dm_imax(0, omp2dm_imin(7, _dm_hdr[0]));
                _dm_rows = omp2dm_imax(0, omp2dm_imax(0, omp2dm_imin(7, _dm_last)) - _dm_row0 + 1);
                MPI_Send(&b[_dm_row0][0], _dm_rows * 8, MPI_DOUBLE, 0, 8, MPI_COMM_WORLD); /* result(b) */
                MPI_Send(&s, 1, MPI_DOUBLE, 0, 15, MPI_COMM_WORLD); /* reduce(s) */
            }
        }
    }

    MPI_Finalize();
    return _dm_ret;
}
