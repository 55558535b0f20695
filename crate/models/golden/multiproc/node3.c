/* node3 */
#include <stdint.h>
#include <avr/io.h>
#include "blocks.h"
#include "com.h"
static uint16_t TTTTemperature_temp_buf[1];
void comA_thread(void)
{
    switch (comA_next()) {
    case ID_x0: com_send_comA(GATE_comA, node0, TTTTemperature_temp_buf, sizeof TTTTemperature_temp_buf); break;
    case ID_x1: com_send_comA(GATE_comA, node1, TTTTemperature_temp_buf, sizeof TTTTemperature_temp_buf); break;
    }
}
int main(void)
{
    TemperatureTimer2Controller_init();
    TTTTemperature_init();
    for (;;) {
        TemperatureTimer2Controller_loop();
        TTTTemperature_loop();
        sem_post(&Pre0);
        timer_wait(); /* 17 STU */
        sem_post(&Pre1);
    }
    TemperatureTimer2Controller_end();
    TTTTemperature_end();
    return 0;
}
/* end of node3 */
